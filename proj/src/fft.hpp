#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace compop::detail {

/// Smallest n >= lower with no prime factor above 7.
int fft_friendly(int lower);

/// In-place complex FFT of fixed shape; sign -1 is forward, +1 backward
/// (both unnormalised). Plan creation is serialised internally.
class Fft {
public:
    Fft(std::vector<int> shape, int sign);
    ~Fft();
    Fft(const Fft&) = delete;
    Fft& operator=(const Fft&) = delete;

    std::complex<double>* data() noexcept { return data_; }
    std::size_t size() const noexcept { return size_; }
    void execute();

private:
    std::size_t size_ = 0;
    std::complex<double>* data_ = nullptr;
    void* plan_ = nullptr;
};

}  // namespace compop::detail
