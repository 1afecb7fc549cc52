#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <cstdio>
#include <stdexcept>
#include <string>

namespace bridgegen {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Thrown on contract violations (bad dims, out-of-domain arguments, ...).
class Error : public std::runtime_error {
  public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Non-finite state during training or sampling; the CLI maps it to exit 3.
class DivergenceError : public Error {
  public:
    explicit DivergenceError(const std::string& what) : Error(what) {}
};

inline void check(bool cond, const std::string& msg) {
    if (!cond) throw Error(msg);
}

// Round-trip-exact float formatting used by every CSV writer.
inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace bridgegen
