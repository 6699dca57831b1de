#ifndef POLYMA_TYPES_HPP
#define POLYMA_TYPES_HPP

#include <Eigen/Dense>
#include <stdexcept>
#include <string>
#include <utility>

namespace polyma {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Error with a stable machine-readable code ("UnboundedInput", "NotPositiveDefinite", ...)
/// in addition to the human-readable message.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& what)
        : std::runtime_error(code + ": " + what), code_(std::move(code)) {}
    const std::string& code() const { return code_; }

private:
    std::string code_;
};

[[noreturn]] inline void fail(const std::string& code, const std::string& what) {
    throw Error(code, what);
}

/// Global geometric tolerance for on-plane / incidence tests.
struct GeomConfig {
    double tau_geom = 1e-9;
};

inline Vec vec2(double a, double b) {
    Vec v(2);
    v << a, b;
    return v;
}

inline Vec vec3(double a, double b, double c) {
    Vec v(3);
    v << a, b, c;
    return v;
}

}  // namespace polyma

#endif
