#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include <fftw3.h>

#include "qnoise/constants.hpp"
#include "qnoise/spectrum.hpp"

// Averaged-periodogram (Welch) PSD estimation. Normalization is chosen so a
// white channel of per-sample variance 1/(2 dt) comes out flat at 1/2, the
// two-sided symmetrized vacuum level used by the analytic models.

namespace qnoise {

enum class WindowKind { Rectangular, Hann };

inline std::vector<double> make_window(WindowKind kind, std::size_t n) {
  std::vector<double> w(n, 1.0);
  if (kind == WindowKind::Hann) {
    // periodic variant, appropriate for averaged spectral estimation
    for (std::size_t i = 0; i < n; ++i)
      w[i] = 0.5 * (1.0 - std::cos(two_pi * static_cast<double>(i) /
                                   static_cast<double>(n)));
  }
  return w;
}

// Streams segments of equal-dt records through an FFT and accumulates
// per-bin mean and scatter. Segments never straddle two fed records, so
// independent trajectories can be fed one after another.
class PsdAccumulator {
 public:
  PsdAccumulator(double dt, std::size_t segment_length,
                 double overlap_fraction = 0.5,
                 WindowKind window = WindowKind::Hann)
      : dt_(dt), nseg_(segment_length), overlap_(overlap_fraction),
        window_(make_window(window, segment_length)) {
    if (!(dt > 0.0))
      throw std::invalid_argument("PsdAccumulator: dt must be > 0");
    if (segment_length < 8)
      throw std::invalid_argument("PsdAccumulator: segment too short");
    if (overlap_fraction < 0.0 || !(overlap_fraction < 1.0))
      throw std::invalid_argument("PsdAccumulator: overlap must be in [0, 1)");
    window_sumsq_ = 0.0;
    for (double w : window_) window_sumsq_ += w * w;
    const std::size_t nbins = nseg_ / 2 + 1;
    sum_.assign(nbins, 0.0);
    sumsq_.assign(nbins, 0.0);
    in_ = fftw_alloc_real(nseg_);
    out_ = fftw_alloc_complex(nbins);
    plan_ = fftw_plan_dft_r2c_1d(static_cast<int>(nseg_), in_, out_,
                                 FFTW_ESTIMATE);
  }

  PsdAccumulator(const PsdAccumulator&) = delete;
  PsdAccumulator& operator=(const PsdAccumulator&) = delete;

  ~PsdAccumulator() {
    fftw_destroy_plan(plan_);
    fftw_free(in_);
    fftw_free(out_);
  }

  void feed(const std::vector<double>& record) {
    if (record.size() < nseg_) return;
    const std::size_t hop = std::max<std::size_t>(
        1, static_cast<std::size_t>(
               std::llround(static_cast<double>(nseg_) * (1.0 - overlap_))));
    for (std::size_t start = 0; start + nseg_ <= record.size(); start += hop)
      process_segment(record.data() + start);
  }

  std::size_t segment_count() const { return count_; }

  Spectrum finalize() const {
    if (count_ < 2)
      throw std::runtime_error(
          "PsdAccumulator: need at least 2 segments, got " +
          std::to_string(count_));
    const std::size_t nbins = sum_.size();
    std::vector<double> grid(nbins), values(nbins), errors(nbins);
    const double n = static_cast<double>(count_);
    for (std::size_t k = 0; k < nbins; ++k) {
      grid[k] = two_pi * static_cast<double>(k) /
                (static_cast<double>(nseg_) * dt_);
      values[k] = sum_[k] / n;
      const double var = std::max(0.0, sumsq_[k] / n - values[k] * values[k]);
      errors[k] = std::sqrt(var / n);  // standard error of the segment mean
    }
    Spectrum s;
    s.grid = std::move(grid);
    s.values = std::move(values);
    s.errors = std::move(errors);
    s.kind = SpectrumKind::LightQuadrature;
    s.validate();
    return s;
  }

 private:
  void process_segment(const double* x) {
    for (std::size_t i = 0; i < nseg_; ++i) in_[i] = x[i] * window_[i];
    fftw_execute(plan_);
    const double norm = dt_ / window_sumsq_;
    for (std::size_t k = 0; k < sum_.size(); ++k) {
      const double p =
          norm * (out_[k][0] * out_[k][0] + out_[k][1] * out_[k][1]);
      sum_[k] += p;
      sumsq_[k] += p * p;
    }
    ++count_;
  }

  double dt_;
  std::size_t nseg_;
  double overlap_;
  std::vector<double> window_;
  double window_sumsq_;
  std::vector<double> sum_, sumsq_;
  std::size_t count_ = 0;
  double* in_;
  fftw_complex* out_;
  fftw_plan plan_;
};

inline Spectrum estimate_psd(const std::vector<double>& samples, double dt,
                             std::size_t segment_length,
                             double overlap_fraction = 0.5,
                             WindowKind window = WindowKind::Hann) {
  if (segment_length > samples.size())
    throw std::invalid_argument(
        "estimate_psd: segment length exceeds sample count");
  PsdAccumulator acc(dt, segment_length, overlap_fraction, window);
  acc.feed(samples);
  return acc.finalize();
}

} // namespace qnoise
