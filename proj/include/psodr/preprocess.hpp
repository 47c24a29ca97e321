#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include <unsupported/Eigen/FFT>

#include "psodr/core_data.hpp"

namespace psodr {

/// Removes the mean of every (sub-epoch, channel) series.
inline TrialTensor demean(TrialTensor trials) {
  for (std::size_t i = 0; i < trials.n_subepochs(); ++i) {
    for (std::size_t c = 0; c < trials.n_channels(); ++c) {
      auto s = trials.data.series(i, c);
      if (s.empty()) continue;
      const double mean = std::accumulate(s.begin(), s.end(), 0.0) / static_cast<double>(s.size());
      for (double& v : s) v -= mean;
    }
  }
  return trials;
}

/// Subtracts the instantaneous cross-channel mean at every sample.
inline TrialTensor common_average_reference(TrialTensor trials) {
  const std::size_t n_ch = trials.n_channels();
  if (n_ch < 2) throw std::invalid_argument("common average reference needs at least 2 channels");
  const std::size_t n_s = trials.n_samples();
  std::vector<double> mean(n_s);
  for (std::size_t i = 0; i < trials.n_subepochs(); ++i) {
    std::fill(mean.begin(), mean.end(), 0.0);
    for (std::size_t c = 0; c < n_ch; ++c) {
      auto s = trials.data.series(i, c);
      for (std::size_t t = 0; t < n_s; ++t) mean[t] += s[t];
    }
    for (double& m : mean) m /= static_cast<double>(n_ch);
    for (std::size_t c = 0; c < n_ch; ++c) {
      auto s = trials.data.series(i, c);
      for (std::size_t t = 0; t < n_s; ++t) s[t] -= mean[t];
    }
  }
  return trials;
}

/// Cuts each super-epoch into sub_len-sample sub-epochs and drops `drop_edges`
/// sub-epochs from each end. Sub-epochs keep their super-epoch index as group id.
inline TrialTensor slice_super_epochs(const Tensor3& raw, std::span<const int> labels, std::size_t sub_len,
                                      std::size_t drop_edges) {
  if (labels.size() != raw.d0) throw std::invalid_argument("one label per super-epoch required");
  if (sub_len == 0 || raw.d2 % sub_len != 0)
    throw std::invalid_argument("super-epoch length " + std::to_string(raw.d2) + " not divisible by " +
                                std::to_string(sub_len));
  const std::size_t per_super = raw.d2 / sub_len;
  if (per_super <= 2 * drop_edges) throw std::invalid_argument("no sub-epochs left after dropping edges");
  const std::size_t kept = per_super - 2 * drop_edges;

  TrialTensor out;
  out.data = Tensor3(raw.d0 * kept, raw.d1, sub_len);
  out.group_id.reserve(raw.d0 * kept);
  out.label.reserve(raw.d0 * kept);
  for (std::size_t e = 0; e < raw.d0; ++e) {
    for (std::size_t s = 0; s < kept; ++s) {
      const std::size_t row = e * kept + s;
      const std::size_t offset = (s + drop_edges) * sub_len;
      for (std::size_t c = 0; c < raw.d1; ++c) {
        auto src = raw.series(e, c).subspan(offset, sub_len);
        std::copy(src.begin(), src.end(), out.data.series(row, c).begin());
      }
      out.group_id.push_back(static_cast<int>(e));
      out.label.push_back(labels[e]);
    }
  }
  return out;
}

/// Magnitude spectrum of every series: bin m in [0, floor(n/2)) holds
/// |sum_t x[t] exp(-2 pi i m t / n)|. No window is applied; bin 0 is kept.
inline FeatureTensor dft_magnitude(const TrialTensor& trials) {
  const std::size_t n = trials.n_samples();
  if (n < 2) throw std::invalid_argument("dft needs at least 2 samples");
  const std::size_t K = n / 2;
  FeatureTensor out;
  out.data = Tensor3(trials.n_subepochs(), trials.n_channels(), K);
  out.group_id = trials.group_id;
  out.label = trials.label;

  Eigen::FFT<double> fft;
  std::vector<double> in(n);
  std::vector<std::complex<double>> spectrum;
  for (std::size_t i = 0; i < trials.n_subepochs(); ++i) {
    for (std::size_t c = 0; c < trials.n_channels(); ++c) {
      auto s = trials.data.series(i, c);
      std::copy(s.begin(), s.end(), in.begin());
      fft.fwd(spectrum, in);
      auto dst = out.data.series(i, c);
      for (std::size_t m = 0; m < K; ++m) dst[m] = std::abs(spectrum[m]);
    }
  }
  return out;
}

/// demean -> common average reference -> magnitude DFT.
inline FeatureTensor extract_features(const SubjectRecord& record) {
  return dft_magnitude(common_average_reference(demean(record.trials)));
}

}  // namespace psodr
