#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "emolex/io.hpp"

namespace emolex {

struct AnnotationRecord;

/// Raised when chance agreement leaves nothing to correct for: alpha with
/// D_e = 0, kappa with p_e = 1.
class DegenerateDataError : public Error {
 public:
  using Error::Error;
};

/// Units x raters grid of nominal codes; std::nullopt marks a missing cell.
class ReliabilityMatrix {
 public:
  ReliabilityMatrix(std::vector<std::string> units, std::vector<std::string> raters);

  const std::vector<std::string>& units() const { return units_; }
  const std::vector<std::string>& raters() const { return raters_; }
  std::size_t n_units() const { return units_.size(); }
  std::size_t n_raters() const { return raters_.size(); }

  std::optional<int> at(std::size_t unit, std::size_t rater) const {
    return cells_[unit * raters_.size() + rater];
  }
  void set(std::size_t unit, std::size_t rater, std::optional<int> v) {
    cells_[unit * raters_.size() + rater] = v;
  }
  std::span<const std::optional<int>> row(std::size_t unit) const {
    return {cells_.data() + unit * raters_.size(), raters_.size()};
  }

  /// Optional display names for codes (index = code); used by the TSV writer.
  std::vector<std::string> category_names;

  /// Copy restricted to the given rater columns, in the given order.
  ReliabilityMatrix select_raters(std::span<const std::size_t> columns) const;

 private:
  std::vector<std::string> units_;
  std::vector<std::string> raters_;
  std::vector<std::optional<int>> cells_;
};

/// TSV: header "unit<TAB>rater...", one row per unit, empty cell = missing.
/// Cell strings are coded in sorted order.
ReliabilityMatrix parse_matrix_text(std::string_view tsv, const std::string& source);
ReliabilityMatrix load_matrix(const std::filesystem::path& path);
std::string format_matrix(const ReliabilityMatrix& m);

/// One binary unit per (task, dimension): 1 if selected, 0 if the rater
/// answered without selecting it, missing if skipped or marked wrong word.
/// Units are ordered task-major, dimensions in canonical order.
ReliabilityMatrix build_reliability_matrix(std::span<const AnnotationRecord> records,
                                           std::span<const std::string> task_ids,
                                           std::span<const std::string> raters);

struct AgreementReport {
  double coefficient = 0;
  // Krippendorff's alpha
  double observed_disagreement = 0;
  double expected_disagreement = 0;
  std::size_t n_units = 0;   // units with at least two values
  std::size_t n_values = 0;  // pairable values
  // Cohen's kappa
  double observed_agreement = 0;
  double expected_agreement = 0;
  std::size_t n_items = 0;
};

/// Nominal alpha from the coincidence matrix. Units are accumulated in
/// parallel as exact integer pair counts, so the result does not depend on
/// the thread count.
AgreementReport krippendorff_alpha(const ReliabilityMatrix& m);

AgreementReport cohens_kappa(std::span<const int> a, std::span<const int> b);
AgreementReport cohens_kappa(std::span<const std::string> a, std::span<const std::string> b);

std::string alpha_to_json(const AgreementReport& r);
std::string kappa_to_json(const AgreementReport& r);

namespace reference {

/// Serial coincidence-matrix alpha with floating-point accumulation.
AgreementReport krippendorff_alpha(const ReliabilityMatrix& m);

}  // namespace reference
}  // namespace emolex
