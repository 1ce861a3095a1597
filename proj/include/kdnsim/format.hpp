#pragma once

#include <cstdio>
#include <string>

namespace kdnsim {

// Fixed-precision float formatting so emitted files are byte-stable for a
// given seed. Trailing zeros trimmed, "-0" folded to "0".
inline std::string fmt_double(double value, int precision = 6) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", precision, value);
    std::string s(buf);
    if (s.find('.') != std::string::npos) {
        while (!s.empty() && s.back() == '0') s.pop_back();
        if (!s.empty() && s.back() == '.') s.pop_back();
    }
    if (s == "-0") s = "0";
    return s;
}

} // namespace kdnsim
