#include "pmcw/common.hpp"

#include <cstdio>

namespace pmcw {

double mean_power(const CVector& x) {
    if (x.empty()) return 0.0;
    double acc = 0.0;
    for (const auto& v : x) acc += std::norm(v);
    return acc / static_cast<double>(x.size());
}

}  // namespace pmcw

namespace pmcw {

std::string format_double(double v, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", digits, v);
    return buf;
}

}  // namespace pmcw
