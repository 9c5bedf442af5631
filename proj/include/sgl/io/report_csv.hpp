#ifndef SGL_IO_REPORT_CSV_HPP
#define SGL_IO_REPORT_CSV_HPP

#include <filesystem>
#include <string>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "sgl/io/atomic_file.hpp"
#include "sgl/metrics.hpp"
#include "sgl/sgl_solver.hpp"

namespace sgl::io {

// Eigenvalue index i counts from 2, the first nontrivial mode.
inline std::string format_spectra_csv(const SpectrumComparison& spectra) {
  std::string out = "index,lambda_true,lambda_learned\n";
  for (Eigen::Index i = 0; i < spectra.truth.size(); ++i) {
    out += fmt::format("{},{},{}\n", i + 2, spectra.truth[i], spectra.learned[i]);
  }
  return out;
}

inline std::string format_resistance_csv(const ResistanceCorrelation& resistance) {
  std::string out = "s,t,r_true,r_learned\n";
  for (const ResistanceSample& sample : resistance.samples) {
    out += fmt::format("{},{},{},{}\n", sample.pair.s, sample.pair.t, sample.truth, sample.learned);
  }
  return out;
}

// F is left empty for iterations where it was not evaluated.
inline std::string format_trace_csv(const LearnTrace& trace) {
  std::string out = "iteration,s_max,edges,F\n";
  for (const IterationRecord& r : trace.records) {
    out += fmt::format("{},{},{},{}\n", r.iteration, r.s_max, r.edge_count,
                       r.objective ? fmt::format("{}", *r.objective) : std::string{});
  }
  return out;
}

inline std::string format_layout_csv(const Eigen::MatrixXd& xy) {
  std::string out = "node,x,y\n";
  for (Eigen::Index i = 0; i < xy.rows(); ++i) {
    out += fmt::format("{},{},{}\n", i, xy(i, 0), xy(i, 1));
  }
  return out;
}

inline void write_spectra_csv(const std::filesystem::path& path, const SpectrumComparison& spectra) {
  write_file_atomic(path, format_spectra_csv(spectra));
}

inline void write_resistance_csv(const std::filesystem::path& path, const ResistanceCorrelation& r) {
  write_file_atomic(path, format_resistance_csv(r));
}

inline void write_trace_csv(const std::filesystem::path& path, const LearnTrace& trace) {
  write_file_atomic(path, format_trace_csv(trace));
}

inline void write_layout_csv(const std::filesystem::path& path, const Eigen::MatrixXd& xy) {
  write_file_atomic(path, format_layout_csv(xy));
}

}  // namespace sgl::io

#endif  // SGL_IO_REPORT_CSV_HPP
