#include "fft.hpp"

#include <fftw3.h>

#include <functional>
#include <mutex>
#include <new>
#include <numeric>

namespace compop::detail {

namespace {
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}
}  // namespace

int fft_friendly(int lower) {
    for (int n = std::max(lower, 1);; ++n) {
        int r = n;
        for (int p : {2, 3, 5, 7})
            while (r % p == 0) r /= p;
        if (r == 1) return n;
    }
}

Fft::Fft(std::vector<int> shape, int sign) {
    size_ = std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
    data_ = reinterpret_cast<std::complex<double>*>(fftw_malloc(sizeof(fftw_complex) * size_));
    if (!data_) throw std::bad_alloc();
    std::lock_guard<std::mutex> lock(planner_mutex());
    auto* buf = reinterpret_cast<fftw_complex*>(data_);
    plan_ = fftw_plan_dft(static_cast<int>(shape.size()), shape.data(), buf, buf,
                          sign < 0 ? FFTW_FORWARD : FFTW_BACKWARD, FFTW_ESTIMATE);
}

Fft::~Fft() {
    std::lock_guard<std::mutex> lock(planner_mutex());
    if (plan_) fftw_destroy_plan(static_cast<fftw_plan>(plan_));
    fftw_free(data_);
}

void Fft::execute() { fftw_execute(static_cast<fftw_plan>(plan_)); }

}  // namespace compop::detail
