#include "exforge/toylang.hpp"

#include <array>
#include <cctype>
#include <charconv>
#include <limits>
#include <unordered_map>

namespace exforge::toy {

std::string Diagnostic::render() const {
  return "line " + std::to_string(line) + ", col " + std::to_string(col) +
         ": " + message;
}

CompileError::CompileError(Diagnostic d)
    : std::runtime_error(d.render()), diag_(std::move(d)) {}

namespace {

constexpr std::array<std::string_view, 7> kKeywords = {
    "read", "print", "if", "else", "while", "alloc", "free"};

constexpr std::array<std::string_view, 8> kConstructNames = {
    "ASSIGN", "READ", "PRINT", "IF", "WHILE", "ALLOC", "FREE", "ARRAY_REF"};

bool is_ident_start(char c) {
  return std::isalpha(static_cast<unsigned char>(c)) || c == '_';
}
bool is_ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

}  // namespace

std::string_view construct_name(Construct c) {
  return kConstructNames[static_cast<std::size_t>(c)];
}

std::optional<Construct> construct_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kConstructNames.size(); ++i)
    if (kConstructNames[i] == name) return static_cast<Construct>(i);
  return std::nullopt;
}

std::string_view status_name(RunStatus s) {
  switch (s) {
    case RunStatus::Ok: return "ok";
    case RunStatus::RuntimeError: return "runtime_error";
    case RunStatus::StepLimit: return "step_limit";
    case RunStatus::CellLimit: return "cell_limit";
  }
  return "ok";
}

// ---- lexer -----------------------------------------------------------------

std::vector<Token> tokenize(std::string_view src) {
  std::vector<Token> out;
  int line = 1, col = 1;
  std::size_t i = 0;
  auto advance = [&](std::size_t n) {
    for (std::size_t k = 0; k < n; ++k, ++i) {
      if (src[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
  };

  while (i < src.size()) {
    char c = src[i];
    if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
      advance(1);
      continue;
    }
    if (c == '#') {
      while (i < src.size() && src[i] != '\n') advance(1);
      continue;
    }
    const int tl = line, tc = col;
    if (std::isdigit(static_cast<unsigned char>(c))) {
      std::size_t j = i;
      while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
      std::string text(src.substr(i, j - i));
      std::int64_t v = 0;
      auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
      if (ec != std::errc{})
        throw CompileError({tl, tc, "integer literal out of range"});
      out.push_back({TokenKind::Int, std::move(text), tl, tc});
      advance(j - i);
      continue;
    }
    if (is_ident_start(c)) {
      std::size_t j = i;
      while (j < src.size() && is_ident_char(src[j])) ++j;
      std::string text(src.substr(i, j - i));
      bool kw = false;
      for (auto k : kKeywords) kw = kw || k == text;
      out.push_back({kw ? TokenKind::Keyword : TokenKind::Ident, std::move(text), tl, tc});
      advance(j - i);
      continue;
    }
    if (i + 1 < src.size()) {
      std::string_view two = src.substr(i, 2);
      if (two == "<=" || two == ">=" || two == "==" || two == "!=" ||
          two == "&&" || two == "||") {
        out.push_back({TokenKind::Symbol, std::string(two), tl, tc});
        advance(2);
        continue;
      }
    }
    constexpr std::string_view kSingles = "=+-*/%<>!(){}[]";
    if (kSingles.find(c) != std::string_view::npos) {
      out.push_back({TokenKind::Symbol, std::string(1, c), tl, tc});
      advance(1);
      continue;
    }
    throw CompileError({tl, tc, std::string("unexpected character '") + c + "'"});
  }
  return out;
}

// ---- parser ----------------------------------------------------------------

namespace {

constexpr int kMaxNesting = 512;

class Parser {
 public:
  explicit Parser(const std::vector<Token>& toks) : toks_(toks) {}

  Program program() {
    Program p;
    while (!at_end()) p.statements.push_back(statement());
    return p;
  }

 private:
  const std::vector<Token>& toks_;
  std::size_t pos_ = 0;
  int depth_ = 0;

  bool at_end() const { return pos_ >= toks_.size(); }
  const Token& peek() const { return toks_[pos_]; }

  bool is_sym(std::string_view s) const {
    return !at_end() && peek().kind == TokenKind::Symbol && peek().text == s;
  }
  bool is_kw(std::string_view s) const {
    return !at_end() && peek().kind == TokenKind::Keyword && peek().text == s;
  }

  // Position of the current token, or one past the final token.
  std::pair<int, int> here() const {
    if (!at_end()) return {peek().line, peek().col};
    if (toks_.empty()) return {1, 1};
    const Token& last = toks_.back();
    return {last.line, last.col + static_cast<int>(last.text.size())};
  }

  [[noreturn]] void fail(std::string message) const {
    auto [l, c] = here();
    throw CompileError({l, c, std::move(message)});
  }
  [[noreturn]] void unexpected() const {
    fail("unexpected token '" + (at_end() ? std::string("end of input") : peek().text) + "'");
  }

  void expect(std::string_view sym) {
    if (!is_sym(sym)) fail("expected '" + std::string(sym) + "'");
    ++pos_;
  }

  std::string identifier() {
    if (at_end() || peek().kind != TokenKind::Ident) unexpected();
    return toks_[pos_++].text;
  }

  struct Nest {
    Parser& p;
    explicit Nest(Parser& parser) : p(parser) {
      if (++p.depth_ > kMaxNesting) p.unexpected();
    }
    ~Nest() { --p.depth_; }
  };

  Block block() {
    expect("{");
    Block b;
    while (!is_sym("}")) {
      if (at_end()) fail("expected '}'");
      b.push_back(statement());
    }
    ++pos_;
    return b;
  }

  Stmt statement() {
    if (at_end()) unexpected();
    Nest guard(*this);
    const Token& t = peek();
    Stmt s{{}, t.line, t.col};
    if (t.kind == TokenKind::Ident) {
      std::string name = toks_[pos_++].text;
      if (is_sym("[")) {
        ++pos_;
        auto idx = expression();
        expect("]");
        expect("=");
        s.node = ArrayAssign{std::move(name), std::move(idx), expression()};
      } else {
        expect("=");
        s.node = Assign{std::move(name), expression()};
      }
      return s;
    }
    if (t.kind != TokenKind::Keyword) unexpected();
    const std::string kw = t.text;
    if (kw == "else") unexpected();
    ++pos_;
    if (kw == "read") {
      s.node = Read{identifier()};
    } else if (kw == "print") {
      s.node = Print{expression()};
    } else if (kw == "if") {
      If node{expression(), block(), {}};
      if (is_kw("else")) {
        ++pos_;
        if (is_kw("if"))
          node.else_branch.push_back(statement());
        else
          node.else_branch = block();
      }
      s.node = std::move(node);
    } else if (kw == "while") {
      auto cond = expression();
      s.node = While{std::move(cond), block()};
    } else if (kw == "alloc") {
      auto name = identifier();
      s.node = Alloc{std::move(name), expression()};
    } else {  // free
      s.node = Free{identifier()};
    }
    return s;
  }

  ExprPtr make(Expr e) { return std::make_unique<Expr>(std::move(e)); }

  ExprPtr binary_level(int level) {
    // 0: ||  1: &&  2: comparisons  3: + -  4: * / %
    static const std::vector<std::vector<std::pair<std::string_view, BinOp>>> kLevels = {
        {{"||", BinOp::Or}},
        {{"&&", BinOp::And}},
        {{"<", BinOp::Lt}, {"<=", BinOp::Le}, {">", BinOp::Gt},
         {">=", BinOp::Ge}, {"==", BinOp::Eq}, {"!=", BinOp::Ne}},
        {{"+", BinOp::Add}, {"-", BinOp::Sub}},
        {{"*", BinOp::Mul}, {"/", BinOp::Div}, {"%", BinOp::Mod}},
    };
    if (level == static_cast<int>(kLevels.size())) return unary();
    auto lhs = binary_level(level + 1);
    for (;;) {
      const std::pair<std::string_view, BinOp>* hit = nullptr;
      for (const auto& op : kLevels[level])
        if (is_sym(op.first)) hit = &op;
      if (!hit) return lhs;
      const Token& optok = toks_[pos_++];
      auto rhs = binary_level(level + 1);
      lhs = make({Binary{hit->second, std::move(lhs), std::move(rhs)}, optok.line, optok.col});
    }
  }

  ExprPtr expression() {
    Nest guard(*this);
    return binary_level(0);
  }

  ExprPtr unary() {
    if (is_sym("-") || is_sym("!")) {
      Nest guard(*this);
      const Token& t = toks_[pos_++];
      auto operand = unary();
      return make({Unary{t.text[0], std::move(operand)}, t.line, t.col});
    }
    return primary();
  }

  ExprPtr primary() {
    if (at_end()) fail("expected expression");
    const Token& t = peek();
    if (t.kind == TokenKind::Int) {
      ++pos_;
      std::int64_t v = 0;
      std::from_chars(t.text.data(), t.text.data() + t.text.size(), v);
      return make({IntLit{v}, t.line, t.col});
    }
    if (t.kind == TokenKind::Ident) {
      ++pos_;
      if (is_sym("[")) {
        ++pos_;
        auto idx = expression();
        expect("]");
        return make({ArrayRef{t.text, std::move(idx)}, t.line, t.col});
      }
      return make({Var{t.text}, t.line, t.col});
    }
    if (is_sym("(")) {
      ++pos_;
      auto e = expression();
      expect(")");
      return e;
    }
    fail("expected expression");
  }
};

}  // namespace

Program parse(const std::vector<Token>& tokens) { return Parser(tokens).program(); }

Program compile(std::string_view source) { return parse(tokenize(source)); }

// ---- interpreter -----------------------------------------------------------

namespace {

struct StepLimitHit {};
struct CellLimitHit {};
struct Fault {
  Diagnostic diag;
};

std::int64_t wrap_add(std::int64_t a, std::int64_t b) {
  return static_cast<std::int64_t>(static_cast<std::uint64_t>(a) + static_cast<std::uint64_t>(b));
}
std::int64_t wrap_sub(std::int64_t a, std::int64_t b) {
  return static_cast<std::int64_t>(static_cast<std::uint64_t>(a) - static_cast<std::uint64_t>(b));
}
std::int64_t wrap_mul(std::int64_t a, std::int64_t b) {
  return static_cast<std::int64_t>(static_cast<std::uint64_t>(a) * static_cast<std::uint64_t>(b));
}

class Machine {
 public:
  Machine(std::string_view input, const Limits& limits) : input_(input), limits_(limits) {}

  RunResult run(const Program& p) {
    RunResult r;
    try {
      exec_block(p.statements);
    } catch (const StepLimitHit&) {
      r.status = RunStatus::StepLimit;
    } catch (const CellLimitHit&) {
      r.status = RunStatus::CellLimit;
    } catch (const Fault& f) {
      r.status = RunStatus::RuntimeError;
      r.error = f.diag;
    }
    r.output = std::move(out_);
    r.metrics = {steps_, peak_, std::move(trace_)};
    return r;
  }

 private:
  struct Slot {
    bool is_array = false;
    std::int64_t scalar = 0;
    std::vector<std::int64_t> cells;
  };

  std::string_view input_;
  std::size_t in_pos_ = 0;
  Limits limits_;
  std::unordered_map<std::string, Slot> env_;
  std::int64_t steps_ = 0;
  std::int64_t live_ = 0;
  std::int64_t peak_ = 0;
  Trace trace_;
  std::string out_;

  void tick() {
    if (steps_ >= limits_.max_steps) throw StepLimitHit{};
    ++steps_;
  }

  void take_cells(std::int64_t n) {
    if (n > limits_.max_cells - live_) throw CellLimitHit{};
    live_ += n;
    if (live_ > peak_) peak_ = live_;
  }

  [[noreturn]] static void fault(int line, int col, std::string msg) {
    throw Fault{{line, col, std::move(msg)}};
  }

  void bind_scalar(const std::string& name, std::int64_t v, int line, int col) {
    auto it = env_.find(name);
    if (it == env_.end()) {
      take_cells(1);
      env_.emplace(name, Slot{false, v, {}});
      return;
    }
    if (it->second.is_array) fault(line, col, "'" + name + "' is an array");
    it->second.scalar = v;
  }

  Slot& array_slot(const std::string& name, int line, int col) {
    auto it = env_.find(name);
    if (it == env_.end() || !it->second.is_array)
      fault(line, col, "'" + name + "' is not an array");
    return it->second;
  }

  std::int64_t& element(const std::string& name, std::int64_t idx, int line, int col) {
    Slot& s = array_slot(name, line, col);
    if (idx < 0 || idx >= static_cast<std::int64_t>(s.cells.size()))
      fault(line, col, "index out of bounds");
    return s.cells[static_cast<std::size_t>(idx)];
  }

  std::int64_t read_input(int line, int col) {
    while (in_pos_ < input_.size() && std::isspace(static_cast<unsigned char>(input_[in_pos_])))
      ++in_pos_;
    if (in_pos_ >= input_.size()) fault(line, col, "read past end of input");
    std::size_t end = in_pos_;
    while (end < input_.size() && !std::isspace(static_cast<unsigned char>(input_[end]))) ++end;
    std::string_view word = input_.substr(in_pos_, end - in_pos_);
    in_pos_ = end;
    std::int64_t v = 0;
    auto [p, ec] = std::from_chars(word.data(), word.data() + word.size(), v);
    if (ec != std::errc{} || p != word.data() + word.size())
      fault(line, col, "malformed input");
    return v;
  }

  void exec_block(const Block& b) {
    for (const Stmt& s : b) exec(s);
  }

  void exec(const Stmt& s) {
    tick();
    std::visit([&](const auto& n) { exec_node(n, s); }, s.node);
  }

  void exec_node(const Assign& n, const Stmt& s) {
    trace_.insert(Construct::Assign);
    std::int64_t v = eval(*n.value);
    bind_scalar(n.name, v, s.line, s.col);
  }
  void exec_node(const ArrayAssign& n, const Stmt& s) {
    trace_.insert(Construct::Assign);
    std::int64_t idx = eval(*n.index);
    std::int64_t v = eval(*n.value);
    element(n.name, idx, s.line, s.col) = v;
  }
  void exec_node(const Read& n, const Stmt& s) {
    trace_.insert(Construct::Read);
    bind_scalar(n.name, read_input(s.line, s.col), s.line, s.col);
  }
  void exec_node(const Print& n, const Stmt&) {
    trace_.insert(Construct::Print);
    out_ += std::to_string(eval(*n.value));
    out_ += '\n';
  }
  void exec_node(const If& n, const Stmt&) {
    trace_.insert(Construct::If);
    if (eval(*n.cond) != 0)
      exec_block(n.then_branch);
    else
      exec_block(n.else_branch);
  }
  void exec_node(const While& n, const Stmt&) {
    trace_.insert(Construct::While);
    while (eval(*n.cond) != 0) exec_block(n.body);
  }
  void exec_node(const Alloc& n, const Stmt& s) {
    trace_.insert(Construct::Alloc);
    std::int64_t size = eval(*n.size);
    if (size <= 0) fault(s.line, s.col, "non-positive alloc size");
    if (env_.count(n.name)) fault(s.line, s.col, "alloc of live name '" + n.name + "'");
    take_cells(size);
    env_.emplace(n.name, Slot{true, 0, std::vector<std::int64_t>(static_cast<std::size_t>(size), 0)});
  }
  void exec_node(const Free& n, const Stmt& s) {
    trace_.insert(Construct::Free);
    auto it = env_.find(n.name);
    if (it == env_.end() || !it->second.is_array)
      fault(s.line, s.col, "free of non-live name '" + n.name + "'");
    live_ -= static_cast<std::int64_t>(it->second.cells.size());
    env_.erase(it);
  }

  std::int64_t eval(const Expr& e) {
    tick();
    return std::visit([&](const auto& n) { return eval_node(n, e); }, e.node);
  }

  std::int64_t eval_node(const IntLit& n, const Expr&) { return n.value; }
  std::int64_t eval_node(const Var& n, const Expr& e) {
    auto it = env_.find(n.name);
    if (it == env_.end()) fault(e.line, e.col, "unbound variable '" + n.name + "'");
    if (it->second.is_array) fault(e.line, e.col, "'" + n.name + "' is an array");
    return it->second.scalar;
  }
  std::int64_t eval_node(const ArrayRef& n, const Expr& e) {
    trace_.insert(Construct::ArrayRef);
    std::int64_t idx = eval(*n.index);
    return element(n.name, idx, e.line, e.col);
  }
  std::int64_t eval_node(const Unary& n, const Expr&) {
    std::int64_t v = eval(*n.operand);
    return n.op == '-' ? wrap_sub(0, v) : static_cast<std::int64_t>(v == 0);
  }
  std::int64_t eval_node(const Binary& n, const Expr& e) {
    std::int64_t a = eval(*n.lhs);
    if (n.op == BinOp::And) return a != 0 && eval(*n.rhs) != 0;
    if (n.op == BinOp::Or) return a != 0 || eval(*n.rhs) != 0;
    std::int64_t b = eval(*n.rhs);
    constexpr auto kMin = std::numeric_limits<std::int64_t>::min();
    switch (n.op) {
      case BinOp::Add: return wrap_add(a, b);
      case BinOp::Sub: return wrap_sub(a, b);
      case BinOp::Mul: return wrap_mul(a, b);
      case BinOp::Div:
        if (b == 0) fault(e.line, e.col, "division by zero");
        return (a == kMin && b == -1) ? kMin : a / b;
      case BinOp::Mod:
        if (b == 0) fault(e.line, e.col, "modulo by zero");
        return (a == kMin && b == -1) ? 0 : a % b;
      case BinOp::Lt: return a < b;
      case BinOp::Le: return a <= b;
      case BinOp::Gt: return a > b;
      case BinOp::Ge: return a >= b;
      case BinOp::Eq: return a == b;
      case BinOp::Ne: return a != b;
      default: break;
    }
    return 0;
  }
};

}  // namespace

RunResult execute(const Program& program, std::string_view input, const Limits& limits) {
  return Machine(input, limits).run(program);
}

}  // namespace exforge::toy
