#pragma once

// Simple sorts shared by the grammar side (sorts over the individual sort)
// and the logic side (adds the proposition sort o).

#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace horseq {

struct SortError : std::runtime_error {
  explicit SortError(const std::string& msg) : std::runtime_error(msg) {}
};

// Raised when a construction would exceed a configured size budget
// (function table enumeration, variant specialization, and the like).
struct CapacityError : std::runtime_error {
  explicit CapacityError(const std::string& msg) : std::runtime_error(msg) {}
};

class Sort {
 public:
  enum class Kind { Iota, O, Arrow };

  Sort() : kind_(Kind::Iota) {}

  static Sort iota() { return Sort(Kind::Iota); }
  static Sort o() { return Sort(Kind::O); }
  static Sort arrow(Sort a, Sort b) {
    Sort s(Kind::Arrow);
    s.arg_ = std::make_shared<Sort>(std::move(a));
    s.res_ = std::make_shared<Sort>(std::move(b));
    return s;
  }
  // arrow(s1, ..., sn, res) right-associated
  static Sort arrows(const std::vector<Sort>& args, Sort res) {
    Sort s = std::move(res);
    for (auto it = args.rbegin(); it != args.rend(); ++it) s = arrow(*it, s);
    return s;
  }

  Kind kind() const { return kind_; }
  bool is_iota() const { return kind_ == Kind::Iota; }
  bool is_o() const { return kind_ == Kind::O; }
  bool is_arrow() const { return kind_ == Kind::Arrow; }

  const Sort& arg() const {
    if (!is_arrow()) throw SortError("sort has no argument");
    return *arg_;
  }
  const Sort& res() const {
    if (!is_arrow()) throw SortError("sort has no result");
    return *res_;
  }

  // rho ::= o | iota -> rho | rho -> rho
  bool is_relational() const {
    if (is_o()) return true;
    if (!is_arrow()) return false;
    return (arg().is_iota() || arg().is_relational()) && res().is_relational();
  }

  // Sorts over iota only: iota | s1 -> s2 with both over iota.
  bool is_tree_sort() const {
    if (is_iota()) return true;
    if (!is_arrow()) return false;
    return arg().is_tree_sort() && res().is_tree_sort();
  }

  // Number of arguments until a non-arrow result.
  int arity() const {
    int n = 0;
    const Sort* s = this;
    while (s->is_arrow()) {
      ++n;
      s = s->res_.get();
    }
    return n;
  }

  std::vector<Sort> args() const {
    std::vector<Sort> out;
    const Sort* s = this;
    while (s->is_arrow()) {
      out.push_back(*s->arg_);
      s = s->res_.get();
    }
    return out;
  }

  Sort result() const {
    const Sort* s = this;
    while (s->is_arrow()) s = s->res_.get();
    return *s;
  }

  // order(iota) = order(o) = 0; order(a -> b) = max(order(a)+1, order(b))
  int order() const {
    if (!is_arrow()) return 0;
    int oa = arg().order() + 1;
    int ob = res().order();
    return oa > ob ? oa : ob;
  }

  bool operator==(const Sort& other) const {
    if (kind_ != other.kind_) return false;
    if (!is_arrow()) return true;
    return *arg_ == *other.arg_ && *res_ == *other.res_;
  }
  bool operator!=(const Sort& other) const { return !(*this == other); }
  // Total order so Sort can key std::map.
  bool operator<(const Sort& other) const {
    if (kind_ != other.kind_) return kind_ < other.kind_;
    if (!is_arrow()) return false;
    if (*arg_ < *other.arg_) return true;
    if (*other.arg_ < *arg_) return false;
    return *res_ < *other.res_;
  }

  std::string str() const {
    switch (kind_) {
      case Kind::Iota: return "i";
      case Kind::O: return "o";
      default: {
        std::string a = arg_->str();
        if (arg_->is_arrow()) a = "(" + a + ")";
        return a + " -> " + res_->str();
      }
    }
  }

 private:
  explicit Sort(Kind k) : kind_(k) {}
  Kind kind_;
  std::shared_ptr<Sort> arg_, res_;
};

}  // namespace horseq
