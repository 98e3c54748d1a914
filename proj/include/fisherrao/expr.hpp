#ifndef FISHERRAO_EXPR_HPP
#define FISHERRAO_EXPR_HPP

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace fisherrao::expr {

/// Parse failure with the byte offset of the offending token.
class ParseError : public std::runtime_error {
  public:
    ParseError(const std::string& message, std::size_t offset);
    std::size_t offset() const { return offset_; }

  private:
    std::size_t offset_;
};

/// Domain fault during evaluation (log of a nonpositive value, 0 raised
/// to a negative power, non-finite result), with the source offset of the
/// offending subexpression.
class EvalError : public std::runtime_error {
  public:
    EvalError(const std::string& message, std::size_t offset);
    std::size_t offset() const { return offset_; }

  private:
    std::size_t offset_;
};

enum class NodeKind { Number, Variable, Unary, Binary, Call };
enum class BinaryOp { Add, Sub, Mul, Div, Pow };
enum class CallFn { Exp, Log, Sqrt, Abs };

struct Node {
    NodeKind kind = NodeKind::Number;
    std::size_t offset = 0;  // byte offset in the source

    double number = 0.0;                  // Number
    std::size_t var_slot = 0;             // Variable: index into variable names
    std::string var_name;                 // Variable
    BinaryOp op = BinaryOp::Add;          // Binary
    CallFn fn = CallFn::Exp;              // Call
    std::shared_ptr<const Node> lhs;      // Binary / Unary child / Call argument
    std::shared_ptr<const Node> rhs;      // Binary only
};

/// Immutable expression over declared variable names. Evaluation binds
/// values positionally to the variable list given at parse time.
class Expr {
  public:
    Expr() = default;
    Expr(std::shared_ptr<const Node> root, std::vector<std::string> variables);

    bool empty() const { return root_ == nullptr; }
    const Node& root() const { return *root_; }
    const std::vector<std::string>& variables() const { return variables_; }

    /// IEEE double evaluation; domain faults raise EvalError rather than
    /// producing NaN or infinity.
    double eval(std::span<const double> values) const;

    /// Minimal-parenthesis rendering that reparses to a structurally
    /// equal tree.
    std::string print() const;

  private:
    std::shared_ptr<const Node> root_;
    std::vector<std::string> variables_;
};

inline constexpr std::size_t kMaxDepth = 64;

/// Recursive-descent parser. Precedence, loosest to tightest: + -, * /,
/// unary minus, ^ (right-associative). Calls: exp, log, sqrt, abs.
Expr parse(std::string_view source, const std::vector<std::string>& allowed_vars);

bool structurally_equal(const Node& a, const Node& b);

}  // namespace fisherrao::expr

#endif
