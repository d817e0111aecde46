#pragma once

#include <stdexcept>
#include <string>

namespace qstab {

// A limit quantity that may be unattainable. Keeps "no finite value exists"
// (infinite required rate) distinct from "the defining expectation diverges",
// instead of smuggling either through NaN or an infinity.
class LimitValue {
 public:
  enum class Kind { finite, infinite, divergent };

  static LimitValue finite(double v) { return LimitValue(Kind::finite, v); }
  static LimitValue infinite() { return LimitValue(Kind::infinite, 0.0); }
  static LimitValue divergent() { return LimitValue(Kind::divergent, 0.0); }

  Kind kind() const { return kind_; }
  bool is_finite() const { return kind_ == Kind::finite; }

  double value() const {
    if (!is_finite()) throw std::logic_error("LimitValue: no finite value (" + str() + ")");
    return value_;
  }

  double value_or(double fallback) const { return is_finite() ? value_ : fallback; }

  std::string str() const;

  friend bool operator==(const LimitValue& a, const LimitValue& b) {
    return a.kind_ == b.kind_ && (a.kind_ != Kind::finite || a.value_ == b.value_);
  }

 private:
  LimitValue(Kind k, double v) : kind_(k), value_(v) {}
  Kind kind_;
  double value_;
};

}  // namespace qstab
