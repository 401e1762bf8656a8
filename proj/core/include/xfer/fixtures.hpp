#pragma once

#include <array>
#include <string_view>

namespace xfer::fixtures {

/// Published layer-wise study of an English-only Conformer RNN-T adapted to
/// multilingual LibriSpeech: average WER per fine-tuned layer and the rank
/// columns reported for fine-tuning and the three estimators.
struct ConformerMls {
  static constexpr std::size_t kLayers = 17;
  static constexpr std::array<double, kLayers> wer = {62.63, 53.49, 53.61, 47.75, 37.02, 48.71,
                                                      42.13, 32.32, 21.74, 22.56, 19.86, 21.71,
                                                      25.56, 19.23, 20.09, 18.87, 18.27};
  static constexpr std::array<double, kLayers> rank_ft = {17, 15, 16, 14, 11, 13, 12, 10, 7,
                                                          8,  4,  6,  9,  3,  5,  2,  1};
  static constexpr std::array<double, kLayers> rank_tsne = {17, 16, 15, 13, 14, 12, 5, 3, 1,
                                                            10, 4,  8,  7,  9,  11, 6, 2};
  static constexpr std::array<double, kLayers> rank_logme = {17, 10, 15, 13, 16, 12, 14, 6, 7,
                                                             9,  5,  11, 8,  4,  3,  2,  1};
  static constexpr std::array<double, kLayers> rank_swd = {17, 11, 10, 14, 13, 16, 15, 8, 9,
                                                           4,  6,  12, 7,  5,  2,  3,  1};
  // Reported correlations and p-values.
  static constexpr double reported_rho_logme = 0.87, reported_p_logme = 6e-6;
  static constexpr double reported_rho_swd = 0.81, reported_p_swd = 7e-5;
  static constexpr double reported_rho_tsne = 0.69, reported_p_tsne = 1e-3;
  // Values recomputed from the rank columns above.
  static constexpr double rho_logme = 0.8701, rho_swd = 0.8088, rho_tsne = 0.696;

  static constexpr std::string_view id(std::size_t i) {
    constexpr std::array<std::string_view, kLayers> ids = {
        "Conf-01", "Conf-02", "Conf-03", "Conf-04", "Conf-05", "Conf-06", "Conf-07", "Conf-08", "Conf-09",
        "Conf-10", "Conf-11", "Conf-12", "Conf-13", "Conf-14", "Conf-15", "Conf-16", "Conf-17"};
    return ids[i];
  }
};

/// Published layer-wise study of a HuBERT base model fine-tuned for phoneme
/// recognition: PER per layer with fine-tuning and LogME rank columns.
struct HubertPer {
  static constexpr std::size_t kLayers = 12;
  static constexpr std::array<double, kLayers> per = {35.63, 29.61, 27.51, 25.43, 23.75, 18.83,
                                                      14.35, 10.86, 8.73,  7.40,  29.84, 30.37};
  static constexpr std::array<double, kLayers> rank_ft = {12, 9, 8, 7, 6, 5, 4, 3, 2, 1, 10, 11};
  static constexpr std::array<double, kLayers> rank_logme = {9, 10, 8, 7, 6, 5, 4, 2, 3, 1, 12, 11};
  static constexpr double reported_rho_logme = 0.94, reported_p_logme = 3e-6;
  static constexpr double rho_logme = 0.944;
};

inline constexpr double kRhoTolerance = 0.005;
inline constexpr double kPValueFactor = 2.0;

}  // namespace xfer::fixtures
