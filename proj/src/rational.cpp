#include "tatum/rational.hpp"

#include <cstdlib>

namespace tatum {

Rational parse_rational(const std::string& text) {
    if (text.empty()) throw FormatError("empty rational");
    const char* s = text.c_str();
    char* end = nullptr;
    errno = 0;
    long long num = std::strtoll(s, &end, 10);
    if (end == s || errno == ERANGE) throw FormatError("bad rational: " + text);
    long long den = 1;
    if (*end == '/') {
        const char* ds = end + 1;
        den = std::strtoll(ds, &end, 10);
        if (end == ds || errno == ERANGE) throw FormatError("bad rational: " + text);
        if (den == 0) throw FormatError("zero denominator: " + text);
    }
    if (*end != '\0') throw FormatError("trailing characters in rational: " + text);
    return Rational(num, den);
}

} // namespace tatum
