#include "docmine/pattern.hpp"

#include <unicode/uchar.h>

#include "docmine/error.hpp"
#include "docmine/text_util.hpp"

namespace docmine::text {

namespace {

constexpr std::size_t kMaxStates = 20000;
constexpr int kMaxRepeat = 255;

struct Range {
  char32_t lo, hi;
};

enum class ClassKind { Digit, Word, Space };

struct CharSet {
  std::vector<Range> ranges;
  std::vector<std::pair<ClassKind, bool>> classes;  // kind, negated
  bool negated = false;
  bool any_but_newline = false;
};

bool in_class(ClassKind k, char32_t c) {
  switch (k) {
    case ClassKind::Digit: return c >= U'0' && c <= U'9';
    case ClassKind::Word: return c == U'_' || u_isalnum(static_cast<UChar32>(c));
    case ClassKind::Space: return is_space(c);
  }
  return false;
}

bool raw_match(const CharSet& s, char32_t c) {
  if (s.any_but_newline) return c != U'\n';
  for (const Range& r : s.ranges)
    if (c >= r.lo && c <= r.hi) return true;
  for (const auto& [k, neg] : s.classes)
    if (in_class(k, c) != neg) return true;
  return false;
}

bool set_match(const CharSet& s, char32_t c, bool fold) {
  bool hit = raw_match(s, c);
  if (!hit && fold && !s.any_but_newline) {
    const auto u = static_cast<UChar32>(c);
    for (UChar32 v : {u_tolower(u), u_toupper(u), u_foldCase(u, U_FOLD_CASE_DEFAULT)})
      if (v != u && raw_match(s, static_cast<char32_t>(v))) {
        hit = true;
        break;
      }
  }
  return hit != s.negated;
}

// --- syntax tree ---------------------------------------------------------------

struct Node;
using NodePtr = std::shared_ptr<Node>;

enum class NodeKind { Set, Concat, Alt, Repeat, Begin, End, WordB, NotWordB, Empty };

struct Node {
  NodeKind kind = NodeKind::Empty;
  CharSet set;
  std::vector<NodePtr> kids;
  int min = 0, max = 0;  // max < 0: unbounded
};

class Parser {
 public:
  explicit Parser(std::u32string s) : s_(std::move(s)) {}

  NodePtr parse() {
    NodePtr n = alternation();
    if (i_ < s_.size()) error(s_[i_] == U')' ? "unbalanced ')'" : "unexpected character");
    return n;
  }

 private:
  [[noreturn]] void error(const std::string& what) const {
    fail(ErrorCode::InvalidRule, "pattern error at " + std::to_string(i_) + ": " + what,
         {{"position", i_}});
  }
  bool more() const { return i_ < s_.size(); }
  char32_t peek() const { return more() ? s_[i_] : 0; }

  NodePtr alternation() {
    std::vector<NodePtr> alts{concat()};
    while (more() && peek() == U'|') {
      ++i_;
      alts.push_back(concat());
    }
    if (alts.size() == 1) return alts[0];
    auto n = std::make_shared<Node>();
    n->kind = NodeKind::Alt;
    n->kids = std::move(alts);
    return n;
  }

  NodePtr concat() {
    auto n = std::make_shared<Node>();
    n->kind = NodeKind::Concat;
    while (more() && peek() != U'|' && peek() != U')') n->kids.push_back(repeat());
    return n;
  }

  int number() {
    if (!more() || peek() < U'0' || peek() > U'9') error("expected a number");
    int v = 0;
    while (more() && peek() >= U'0' && peek() <= U'9') {
      v = v * 10 + static_cast<int>(s_[i_++] - U'0');
      if (v > kMaxRepeat) error("repeat count above 255");
    }
    return v;
  }

  NodePtr repeat() {
    NodePtr atom_node = atom();
    while (more()) {
      int lo = 0, hi = -1;
      const char32_t c = peek();
      if (c == U'*') {
        ++i_;
      } else if (c == U'+') {
        ++i_;
        lo = 1;
      } else if (c == U'?') {
        ++i_;
        hi = 1;
      } else if (c == U'{') {
        ++i_;
        lo = number();
        hi = lo;
        if (peek() == U',') {
          ++i_;
          hi = peek() == U'}' ? -1 : number();
        }
        if (peek() != U'}') error("expected '}'");
        ++i_;
        if (hi >= 0 && hi < lo) error("repeat bounds out of order");
      } else {
        break;
      }
      if (peek() == U'?' || peek() == U'+') error("lazy and possessive quantifiers are not supported");
      if (atom_node->kind == NodeKind::Begin || atom_node->kind == NodeKind::End ||
          atom_node->kind == NodeKind::WordB || atom_node->kind == NodeKind::NotWordB)
        error("nothing to repeat");
      auto r = std::make_shared<Node>();
      r->kind = NodeKind::Repeat;
      r->kids = {atom_node};
      r->min = lo;
      r->max = hi;
      atom_node = r;
    }
    return atom_node;
  }

  static NodePtr set_node(CharSet s) {
    auto n = std::make_shared<Node>();
    n->kind = NodeKind::Set;
    n->set = std::move(s);
    return n;
  }

  NodePtr atom() {
    const char32_t c = s_[i_++];
    switch (c) {
      case U'(': {
        if (peek() == U'?') {
          if (i_ + 1 < s_.size() && s_[i_ + 1] == U':') i_ += 2;
          else error("lookaround and inline flags are not supported");
        }
        NodePtr inner = alternation();
        if (peek() != U')') error("missing ')'");
        ++i_;
        return inner;
      }
      case U'[': return set_node(bracket());
      case U'.': {
        CharSet s;
        s.any_but_newline = true;
        return set_node(s);
      }
      case U'^':
      case U'$': {
        auto n = std::make_shared<Node>();
        n->kind = c == U'^' ? NodeKind::Begin : NodeKind::End;
        return n;
      }
      case U'*': case U'+': case U'?': case U'{': --i_; error("nothing to repeat");
      case U'\\': {
        if (peek() == U'b' || peek() == U'B') {
          auto n = std::make_shared<Node>();
          n->kind = s_[i_++] == U'b' ? NodeKind::WordB : NodeKind::NotWordB;
          return n;
        }
        return set_node(escape(false));
      }
      default: {
        CharSet s;
        s.ranges.push_back({c, c});
        return set_node(s);
      }
    }
  }

  CharSet escape(bool in_bracket) {
    if (!more()) error("dangling backslash");
    const char32_t c = s_[i_++];
    CharSet s;
    auto cls = [&](ClassKind k, bool neg) {
      s.classes.push_back({k, neg});
      return s;
    };
    switch (c) {
      case U'd': return cls(ClassKind::Digit, false);
      case U'D': return cls(ClassKind::Digit, true);
      case U'w': return cls(ClassKind::Word, false);
      case U'W': return cls(ClassKind::Word, true);
      case U's': return cls(ClassKind::Space, false);
      case U'S': return cls(ClassKind::Space, true);
      case U't': s.ranges.push_back({U'\t', U'\t'}); return s;
      case U'n': s.ranges.push_back({U'\n', U'\n'}); return s;
      case U'r': s.ranges.push_back({U'\r', U'\r'}); return s;
      case U'u': {
        if (i_ + 4 > s_.size()) error("\\u needs 4 hex digits");
        char32_t v = 0;
        for (int k = 0; k < 4; ++k) {
          const char32_t h = s_[i_++];
          int d = h >= U'0' && h <= U'9' ? static_cast<int>(h - U'0')
                  : h >= U'a' && h <= U'f' ? static_cast<int>(h - U'a' + 10)
                  : h >= U'A' && h <= U'F' ? static_cast<int>(h - U'A' + 10) : -1;
          if (d < 0) error("bad hex digit");
          v = v * 16 + static_cast<char32_t>(d);
        }
        s.ranges.push_back({v, v});
        return s;
      }
      default:
        if (c >= U'1' && c <= U'9' && !in_bracket) error("back-references are not supported");
        if (u_isalnum(static_cast<UChar32>(c))) error("unknown escape");
        s.ranges.push_back({c, c});
        return s;
    }
  }

  CharSet bracket() {
    CharSet s;
    if (peek() == U'^') {
      s.negated = true;
      ++i_;
    }
    bool first = true;
    while (true) {
      if (!more()) error("missing ']'");
      char32_t c = s_[i_];
      if (c == U']' && !first) {
        ++i_;
        break;
      }
      first = false;
      ++i_;
      char32_t lo = c;
      if (c == U'\\') {
        CharSet e = escape(true);
        if (!e.classes.empty()) {
          s.classes.insert(s.classes.end(), e.classes.begin(), e.classes.end());
          continue;
        }
        lo = e.ranges[0].lo;
      }
      char32_t hi = lo;
      if (peek() == U'-' && i_ + 1 < s_.size() && s_[i_ + 1] != U']') {
        ++i_;
        hi = s_[i_++];
        if (hi == U'\\') {
          CharSet e = escape(true);
          if (!e.classes.empty()) error("class in range");
          hi = e.ranges[0].lo;
        }
        if (hi < lo) error("range out of order");
      }
      s.ranges.push_back({lo, hi});
    }
    return s;
  }

  std::u32string s_;
  std::size_t i_ = 0;
};

// --- program -------------------------------------------------------------------

enum class Op { Set, Split, Jump, Match, Begin, End, WordB, NotWordB };

struct Inst {
  Op op;
  int x = -1, y = -1;
  int set = -1;
};

}  // namespace

struct Pattern::Program {
  std::vector<Inst> code;
  std::vector<CharSet> sets;
  bool fold = false;
};

namespace {

class Compiler {
 public:
  explicit Compiler(Pattern::Program& p) : p_(p) {}

  // Emits n and returns the entry index; dangling outputs patch to `next`.
  void emit(const NodePtr& n) {
    if (p_.code.size() > kMaxStates) fail(ErrorCode::InvalidRule, "pattern too large");
    switch (n->kind) {
      case NodeKind::Empty: return;
      case NodeKind::Set:
        p_.sets.push_back(n->set);
        push({Op::Set, -1, -1, static_cast<int>(p_.sets.size()) - 1});
        return;
      case NodeKind::Begin: push({Op::Begin}); return;
      case NodeKind::End: push({Op::End}); return;
      case NodeKind::WordB: push({Op::WordB}); return;
      case NodeKind::NotWordB: push({Op::NotWordB}); return;
      case NodeKind::Concat:
        for (const auto& k : n->kids) emit(k);
        return;
      case NodeKind::Alt: {
        std::vector<int> jumps;
        for (std::size_t k = 0; k + 1 < n->kids.size(); ++k) {
          const int split = push({Op::Split});
          p_.code[split].x = here();
          emit(n->kids[k]);
          jumps.push_back(push({Op::Jump}));
          p_.code[split].y = here();
        }
        emit(n->kids.back());
        for (int j : jumps) p_.code[j].x = here();
        return;
      }
      case NodeKind::Repeat: {
        const NodePtr& body = n->kids[0];
        for (int k = 0; k < n->min; ++k) emit(body);
        if (n->max < 0) {
          const int split = push({Op::Split});
          p_.code[split].x = here();
          emit(body);
          const int back = push({Op::Jump});
          p_.code[back].x = split;
          p_.code[split].y = here();
        } else {
          std::vector<int> splits;
          for (int k = n->min; k < n->max; ++k) {
            const int split = push({Op::Split});
            p_.code[split].x = here();
            splits.push_back(split);
            emit(body);
          }
          for (int s : splits) p_.code[s].y = here();
        }
        return;
      }
    }
  }

  int push(Inst i) {
    p_.code.push_back(i);
    return static_cast<int>(p_.code.size()) - 1;
  }
  int here() const { return static_cast<int>(p_.code.size()); }

 private:
  Pattern::Program& p_;
};

bool is_word(std::u32string_view t, std::size_t i) {
  return i < t.size() && in_class(ClassKind::Word, t[i]);
}

}  // namespace

Pattern::Pattern(std::string_view source, bool ignore_case)
    : source_(source), ignore_case_(ignore_case) {
  auto prog = std::make_shared<Program>();
  prog->fold = ignore_case;
  Parser parser(to_u32(source));
  const NodePtr root = parser.parse();
  Compiler c(*prog);
  c.emit(root);
  c.push({Op::Match});
  prog_ = std::move(prog);
}

Pattern::~Pattern() = default;
Pattern::Pattern(Pattern&&) noexcept = default;
Pattern& Pattern::operator=(Pattern&&) noexcept = default;
Pattern::Pattern(const Pattern&) = default;
Pattern& Pattern::operator=(const Pattern&) = default;

std::optional<std::size_t> Pattern::longest_at(std::u32string_view text, std::size_t pos) const {
  const Program& p = *prog_;
  const std::size_t n = p.code.size();
  std::vector<int> cur, next;
  std::vector<std::size_t> mark(n, static_cast<std::size_t>(-1));
  std::optional<std::size_t> best;

  // Follows epsilon edges from pc at text position i.
  std::vector<int> stack;
  auto add = [&](std::vector<int>& list, int start, std::size_t i) {
    stack.assign(1, start);
    while (!stack.empty()) {
      const int pc = stack.back();
      stack.pop_back();
      if (mark[static_cast<std::size_t>(pc)] == i) continue;
      mark[static_cast<std::size_t>(pc)] = i;
      const Inst& in = p.code[static_cast<std::size_t>(pc)];
      switch (in.op) {
        case Op::Jump: stack.push_back(in.x); break;
        case Op::Split:
          stack.push_back(in.y);
          stack.push_back(in.x);
          break;
        case Op::Begin:
          if (i == 0) stack.push_back(pc + 1);
          break;
        case Op::End:
          if (i == text.size()) stack.push_back(pc + 1);
          break;
        case Op::WordB:
        case Op::NotWordB: {
          const bool b = (i > 0 && is_word(text, i - 1)) != is_word(text, i);
          if (b == (in.op == Op::WordB)) stack.push_back(pc + 1);
          break;
        }
        case Op::Match:
          if (i > pos) best = i;
          break;
        case Op::Set: list.push_back(pc); break;
      }
    }
  };

  add(cur, 0, pos);
  for (std::size_t i = pos; i < text.size() && !cur.empty(); ++i) {
    next.clear();
    for (int pc : cur) {
      const Inst& in = p.code[static_cast<std::size_t>(pc)];
      if (set_match(p.sets[static_cast<std::size_t>(in.set)], text[i], p.fold)) add(next, pc + 1, i + 1);
    }
    std::swap(cur, next);
  }
  return best;
}

}  // namespace docmine::text
