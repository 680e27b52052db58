#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sesn/tensor.hpp"

namespace sesn {

/// Rows are true classes, columns predicted classes.
struct ConfusionMatrix {
  std::size_t classes = 0;
  std::vector<std::size_t> counts;

  std::size_t at(std::size_t truth, std::size_t pred) const { return counts[truth * classes + pred]; }
  std::size_t total() const;
  std::size_t trace() const;
  std::size_t row_sum(std::size_t truth) const;
  Real accuracy() const;
};

ConfusionMatrix confusion(std::span<const int> preds, std::span<const int> truths, std::size_t classes = 10);

/// CSV with a header row of predicted labels and one row per true label.
std::string confusion_csv(const ConfusionMatrix& cm, const std::vector<std::string>& labels);
std::string confusion_text(const ConfusionMatrix& cm, const std::vector<std::string>& labels);

/// Paired outcome counts of systems A and B over the same items.
struct ContingencyTable {
  std::size_t both_wrong = 0;   // n00
  std::size_t only_a = 0;       // n01
  std::size_t only_b = 0;       // n10
  std::size_t both_right = 0;   // n11

  std::size_t total() const { return both_wrong + only_a + only_b + both_right; }
};

ContingencyTable contingency(const std::vector<bool>& a_correct, const std::vector<bool>& b_correct);

enum class McNemarMethod { chi2_corrected, exact_binomial };

std::string_view to_string(McNemarMethod m);

struct McNemarResult {
  std::size_t b = 0;  // only A correct
  std::size_t c = 0;  // only B correct
  Real statistic = 0.0;
  Real p_value = 1.0;
  McNemarMethod method = McNemarMethod::exact_binomial;
  bool significant_at_0_05 = false;
  bool degenerate = false;  // b + c == 0
};

/// Discordant pairs at or above this count use the continuity-corrected chi-square.
inline constexpr std::size_t kChiSquareMinDiscordant = 25;

/// Survival function of the chi-square distribution with one degree of freedom.
Real chi2_1_survival(Real x);
/// Two-sided exact binomial p-value for b successes out of b + c at p = 1/2.
Real exact_binomial_p(std::size_t b, std::size_t c);

McNemarResult mcnemar(const ContingencyTable& t);
McNemarResult mcnemar(const std::vector<bool>& a_correct, const std::vector<bool>& b_correct);

/// Pairwise McNemar results; diagonal cells are empty.
struct SignificanceGrid {
  std::vector<std::string> names;
  std::vector<std::optional<McNemarResult>> cells;  // row-major, names.size()^2

  const std::optional<McNemarResult>& at(std::size_t i, std::size_t j) const { return cells[i * names.size() + j]; }
  std::size_t populated_pairs() const;
};

SignificanceGrid significance_grid(const std::vector<std::string>& names,
                                   const std::vector<std::vector<bool>>& systems);

/// Columns: system_a, system_b, b, c, statistic, p_value, method, significant (i < j only).
std::string grid_csv(const SignificanceGrid& g);
/// Aligned p-value matrix; '*' marks p < 0.05.
std::string grid_text(const SignificanceGrid& g);

/// Per-item correctness of one model on one evaluation set, as written by
/// `evaluate` and read by `compare`.
struct CorrectnessVector {
  std::string checkpoint;
  std::uint64_t dataset_hash = 0;
  std::vector<bool> values;
};

std::string format_correctness(const CorrectnessVector& v);
CorrectnessVector parse_correctness(const std::string& text, const std::string& what);
void save_correctness(const std::string& path, const CorrectnessVector& v);
CorrectnessVector load_correctness(const std::string& path);

}  // namespace sesn
