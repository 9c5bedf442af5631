#ifndef SGL_SGL_HPP
#define SGL_SGL_HPP

#include "sgl/error.hpp"
#include "sgl/generators.hpp"
#include "sgl/graph.hpp"
#include "sgl/io/atomic_file.hpp"
#include "sgl/io/matrix_market.hpp"
#include "sgl/io/measurement_io.hpp"
#include "sgl/io/report_csv.hpp"
#include "sgl/knn.hpp"
#include "sgl/laplacian_solver.hpp"
#include "sgl/measurements.hpp"
#include "sgl/metrics.hpp"
#include "sgl/parallel.hpp"
#include "sgl/resistance.hpp"
#include "sgl/rng.hpp"
#include "sgl/sgl_solver.hpp"
#include "sgl/spectral.hpp"
#include "sgl/version.hpp"

#endif  // SGL_SGL_HPP
