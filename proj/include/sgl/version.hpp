#ifndef SGL_VERSION_HPP
#define SGL_VERSION_HPP

#define SGL_VERSION_MAJOR 0
#define SGL_VERSION_MINOR 1
#define SGL_VERSION_PATCH 0

namespace sgl {

inline constexpr const char* version = "0.1.0";

}  // namespace sgl

#endif  // SGL_VERSION_HPP
