#ifndef POLYMA_EXPRESSION_HPP
#define POLYMA_EXPRESSION_HPP

#include <memory>
#include <string>

#include "polyma/solver.hpp"
#include "polyma/types.hpp"

namespace polyma {

/// Closed-form scalar expression in the variables x1..x3 with +,-,*,/,^, abs,
/// min, max, sqrt and the trigonometric functions. Unknown identifiers are
/// rejected at parse time so configs stay portable.
class Expression {
public:
    static Expression parse(const std::string& text);
    double eval(const Vec& x) const;
    ScalarField as_field() const;
    const std::string& text() const { return text_; }

    struct Node;

private:
    std::shared_ptr<const Node> root_;
    std::string text_;
};

}  // namespace polyma

#endif
