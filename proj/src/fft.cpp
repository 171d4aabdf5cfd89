#include "pmcw/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <utility>

namespace pmcw {

namespace {

class PlanCache {
public:
    ~PlanCache() {
        for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
    }

    fftw_plan get(std::size_t n, int sign) {
        std::lock_guard lock(mutex_);
        auto key = std::make_pair(n, sign);
        if (auto it = plans_.find(key); it != plans_.end()) return it->second;
        // Planning scratch only; execution uses the new-array interface.
        CVector scratch(n);
        auto* p = reinterpret_cast<fftw_complex*>(scratch.data());
        fftw_plan plan = fftw_plan_dft_1d(static_cast<int>(n), p, p, sign,
                                          FFTW_ESTIMATE | FFTW_UNALIGNED);
        plans_.emplace(key, plan);
        return plan;
    }

private:
    std::mutex mutex_;
    std::map<std::pair<std::size_t, int>, fftw_plan> plans_;
};

PlanCache& cache() {
    static PlanCache instance;
    return instance;
}

void execute(std::span<Complex> x, int sign) {
    if (x.empty()) return;
    fftw_plan plan = cache().get(x.size(), sign);
    auto* p = reinterpret_cast<fftw_complex*>(x.data());
    fftw_execute_dft(plan, p, p);
}

}  // namespace

void dft_inplace(std::span<Complex> x) { execute(x, FFTW_FORWARD); }

void idft_inplace(std::span<Complex> X) {
    execute(X, FFTW_BACKWARD);
    const double scale = 1.0 / static_cast<double>(X.size());
    for (auto& v : X) v *= scale;
}

CVector dft(std::span<const Complex> x) {
    CVector out(x.begin(), x.end());
    dft_inplace(out);
    return out;
}

CVector idft(std::span<const Complex> X) {
    CVector out(X.begin(), X.end());
    idft_inplace(out);
    return out;
}

}  // namespace pmcw
