#pragma once

// Deterministic toy language used for judging. Integer-only, no functions.
//
//   program := stmt*
//   stmt    := IDENT '=' expr | IDENT '[' expr ']' '=' expr | 'read' IDENT
//            | 'print' expr | 'if' expr block ('else' (block | if-stmt))?
//            | 'while' expr block | 'alloc' IDENT expr | 'free' IDENT
//   block   := '{' stmt* '}'
//
// Every executed statement and every evaluated expression node costs one
// step. Scalars take one cell from first bind; arrays take `size` cells from
// alloc until free.

#include <cstdint>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace exforge::toy {

struct Diagnostic {
  int line = 0;
  int col = 0;
  std::string message;

  /// `line <L>, col <C>: <message>`; compile_error_quiz fixtures embed this.
  std::string render() const;
  bool operator==(const Diagnostic&) const = default;
};

/// Thrown by tokenize() and parse().
class CompileError : public std::runtime_error {
 public:
  explicit CompileError(Diagnostic d);
  const Diagnostic& diagnostic() const { return diag_; }

 private:
  Diagnostic diag_;
};

enum class TokenKind { Ident, Int, Keyword, Symbol };

struct Token {
  TokenKind kind;
  std::string text;
  int line = 1;
  int col = 1;
  bool operator==(const Token&) const = default;
};

std::vector<Token> tokenize(std::string_view source);

// Construct kinds recorded in the execution trace.
enum class Construct { Assign, Read, Print, If, While, Alloc, Free, ArrayRef };

std::string_view construct_name(Construct c);  // "ASSIGN", "WHILE", ...
std::optional<Construct> construct_from_name(std::string_view name);

using Trace = std::set<Construct>;

// ---- AST -------------------------------------------------------------------

struct Expr;
using ExprPtr = std::unique_ptr<Expr>;

struct IntLit { std::int64_t value; };
struct Var { std::string name; };
struct ArrayRef { std::string name; ExprPtr index; };
struct Unary { char op; ExprPtr operand; };  // '-' or '!'
enum class BinOp { Add, Sub, Mul, Div, Mod, Lt, Le, Gt, Ge, Eq, Ne, And, Or };
struct Binary { BinOp op; ExprPtr lhs, rhs; };

struct Expr {
  std::variant<IntLit, Var, ArrayRef, Unary, Binary> node;
  int line = 0;
  int col = 0;
};

struct Stmt;
using Block = std::vector<Stmt>;

struct Assign { std::string name; ExprPtr value; };
struct ArrayAssign { std::string name; ExprPtr index, value; };
struct Read { std::string name; };
struct Print { ExprPtr value; };
struct If { ExprPtr cond; Block then_branch, else_branch; };
struct While { ExprPtr cond; Block body; };
struct Alloc { std::string name; ExprPtr size; };
struct Free { std::string name; };

struct Stmt {
  std::variant<Assign, ArrayAssign, Read, Print, If, While, Alloc, Free> node;
  int line = 0;
  int col = 0;
};

struct Program {
  Block statements;
};

Program parse(const std::vector<Token>& tokens);

/// tokenize + parse.
Program compile(std::string_view source);

// ---- execution -------------------------------------------------------------

struct Limits {
  std::int64_t max_steps = 1'000'000;
  std::int64_t max_cells = 10'000;
  bool operator==(const Limits&) const = default;
};

struct RunMetrics {
  std::int64_t steps = 0;
  std::int64_t peak_cells = 0;
  Trace trace;
  bool operator==(const RunMetrics&) const = default;
};

enum class RunStatus { Ok, RuntimeError, StepLimit, CellLimit };

std::string_view status_name(RunStatus s);

struct RunResult {
  RunStatus status = RunStatus::Ok;
  std::optional<Diagnostic> error;  // set iff status == RuntimeError
  std::string output;
  RunMetrics metrics;
  bool operator==(const RunResult&) const = default;
};

RunResult execute(const Program& program, std::string_view input,
                  const Limits& limits);

}  // namespace exforge::toy
