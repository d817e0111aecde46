#include "qstab/limit_value.hpp"

#include <cstdio>

namespace qstab {

std::string LimitValue::str() const {
  switch (kind_) {
    case Kind::infinite:
      return "inf";
    case Kind::divergent:
      return "divergent";
    case Kind::finite:
    default: {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.6g", value_);
      return buf;
    }
  }
}

}  // namespace qstab
