#include "emolex/reliability.hpp"

#include <algorithm>
#include <cstdint>
#include <map>
#include <set>
#include <unordered_map>

#include "emolex/annotation.hpp"
#include "emolex/emotion.hpp"
#include "json.hpp"

namespace emolex {

ReliabilityMatrix::ReliabilityMatrix(std::vector<std::string> units, std::vector<std::string> raters)
    : units_(std::move(units)), raters_(std::move(raters)) {
  if (raters_.size() < 2) throw Error("reliability matrix needs at least 2 raters");
  cells_.assign(units_.size() * raters_.size(), std::nullopt);
}

ReliabilityMatrix ReliabilityMatrix::select_raters(std::span<const std::size_t> columns) const {
  std::vector<std::string> names;
  for (std::size_t c : columns) names.push_back(raters_.at(c));
  ReliabilityMatrix out(units_, std::move(names));
  out.category_names = category_names;
  for (std::size_t u = 0; u < units_.size(); ++u) {
    for (std::size_t j = 0; j < columns.size(); ++j) out.set(u, j, at(u, columns[j]));
  }
  return out;
}

ReliabilityMatrix parse_matrix_text(std::string_view tsv, const std::string& source) {
  const auto lines = io::split_lines(tsv);
  if (lines.empty()) throw ParseError(source, 1, "missing header row");
  const auto header = io::split(lines[0], '\t');
  if (header.size() < 3) throw ParseError(source, 1, "header needs a unit column and at least 2 raters");
  std::vector<std::string> raters(header.begin() + 1, header.end());

  std::vector<std::string> units;
  std::vector<std::vector<std::string_view>> rows;
  std::set<std::string> categories;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    auto cols = io::split(lines[i], '\t');
    if (cols.size() != header.size()) {
      throw ParseError(source, i + 1, "expected " + std::to_string(header.size()) + " columns");
    }
    units.emplace_back(cols[0]);
    for (std::size_t c = 1; c < cols.size(); ++c) {
      if (!cols[c].empty()) categories.emplace(cols[c]);
    }
    rows.push_back(std::move(cols));
  }

  ReliabilityMatrix m(std::move(units), std::move(raters));
  m.category_names.assign(categories.begin(), categories.end());
  std::map<std::string, int, std::less<>> code;
  for (const auto& c : m.category_names) code.emplace(c, static_cast<int>(code.size()));
  for (std::size_t u = 0; u < rows.size(); ++u) {
    for (std::size_t r = 0; r < m.n_raters(); ++r) {
      std::string_view cell = rows[u][r + 1];
      if (!cell.empty()) m.set(u, r, code.find(cell)->second);
    }
  }
  return m;
}

ReliabilityMatrix load_matrix(const std::filesystem::path& path) {
  return parse_matrix_text(io::read_file(path), path.string());
}

std::string format_matrix(const ReliabilityMatrix& m) {
  std::string out = "unit";
  for (const auto& r : m.raters()) out += '\t' + r;
  out += '\n';
  for (std::size_t u = 0; u < m.n_units(); ++u) {
    out += m.units()[u];
    for (std::size_t r = 0; r < m.n_raters(); ++r) {
      out += '\t';
      if (auto v = m.at(u, r)) {
        const auto idx = static_cast<std::size_t>(*v);
        out += (*v >= 0 && idx < m.category_names.size()) ? m.category_names[idx] : std::to_string(*v);
      }
    }
    out += '\n';
  }
  return out;
}

ReliabilityMatrix build_reliability_matrix(std::span<const AnnotationRecord> records,
                                           std::span<const std::string> task_ids,
                                           std::span<const std::string> raters) {
  std::unordered_map<std::string, std::size_t> rater_col;
  for (std::size_t i = 0; i < raters.size(); ++i) rater_col.emplace(raters[i], i);
  std::unordered_map<std::string, std::size_t> task_row;
  for (std::size_t i = 0; i < task_ids.size(); ++i) task_row.emplace(task_ids[i], i);

  std::vector<std::string> units;
  units.reserve(task_ids.size() * kNumEmotions);
  for (const auto& t : task_ids) {
    for (Emotion e : kAllEmotions) units.push_back(t + "/" + std::string(to_string(e)));
  }
  ReliabilityMatrix m(std::move(units), std::vector<std::string>(raters.begin(), raters.end()));
  m.category_names = {"0", "1"};

  for (const AnnotationRecord& rec : records) {
    auto rc = rater_col.find(rec.annotator_id);
    if (rc == rater_col.end()) throw Error("record from unknown rater \"" + rec.annotator_id + "\"");
    auto tr = task_row.find(rec.task_id);
    const auto* resp = std::get_if<EmotionResponse>(&rec.response);
    if (tr == task_row.end() || resp == nullptr) continue;
    const std::size_t base = tr->second * kNumEmotions;
    for (std::size_t d = 0; d < kNumEmotions; ++d) {
      std::optional<int> v;
      if (!resp->wrong_word) v = resp->labels.contains(kAllEmotions[d]) ? 1 : 0;
      m.set(base + d, rc->second, v);  // later records overwrite
    }
  }
  return m;
}

namespace {

AgreementReport finish_alpha(const std::vector<std::vector<double>>& o, std::size_t n_units) {
  const std::size_t v = o.size();
  std::vector<double> marg(v, 0.0);
  double n = 0;
  double off_obs = 0;
  for (std::size_t c = 0; c < v; ++c) {
    for (std::size_t k = 0; k < v; ++k) {
      marg[c] += o[c][k];
      if (c != k) off_obs += o[c][k];
    }
    n += marg[c];
  }
  double off_exp = 0;
  for (std::size_t c = 0; c < v; ++c) {
    for (std::size_t k = 0; k < v; ++k) {
      if (c != k) off_exp += marg[c] * marg[k];
    }
  }
  AgreementReport r;
  r.n_units = n_units;
  r.n_values = static_cast<std::size_t>(n + 0.5);
  r.observed_disagreement = off_obs / n;
  r.expected_disagreement = off_exp / (n * (n - 1));
  r.coefficient = 1.0 - r.observed_disagreement / r.expected_disagreement;
  return r;
}

// Dense category index for every present cell, plus how many categories
// occur in pairable units.
struct DenseCodes {
  std::vector<int> cells;  // -1 = missing
  std::size_t categories = 0;
  std::size_t pairable_categories = 0;
};

DenseCodes densify(const ReliabilityMatrix& m) {
  DenseCodes d;
  std::map<int, int> index;
  for (std::size_t u = 0; u < m.n_units(); ++u) {
    for (const auto& cell : m.row(u)) {
      if (cell) index.emplace(*cell, 0);
    }
  }
  int next = 0;
  for (auto& [code, idx] : index) idx = next++;
  d.categories = index.size();
  d.cells.assign(m.n_units() * m.n_raters(), -1);
  std::vector<bool> pairable(d.categories, false);
  for (std::size_t u = 0; u < m.n_units(); ++u) {
    std::size_t present = 0;
    for (std::size_t r = 0; r < m.n_raters(); ++r) {
      if (auto cell = m.at(u, r)) {
        d.cells[u * m.n_raters() + r] = index[*cell];
        ++present;
      }
    }
    if (present >= 2) {
      for (std::size_t r = 0; r < m.n_raters(); ++r) {
        const int c = d.cells[u * m.n_raters() + r];
        if (c >= 0) pairable[static_cast<std::size_t>(c)] = true;
      }
    }
  }
  d.pairable_categories = static_cast<std::size_t>(std::count(pairable.begin(), pairable.end(), true));
  return d;
}

void check_scorable(std::size_t n_units, std::size_t pairable_categories) {
  if (n_units == 0) throw Error("krippendorff_alpha: no unit has two or more values");
  if (pairable_categories < 2) {
    throw DegenerateDataError("krippendorff_alpha: degenerate data, all values identical (D_e = 0)");
  }
}

}  // namespace

AgreementReport krippendorff_alpha(const ReliabilityMatrix& m) {
  const DenseCodes d = densify(m);
  const std::size_t v = d.categories;
  const std::size_t raters = m.n_raters();
  // pairs[(mu * v + c) * v + k]: sum over units with mu values of
  // n_uc * (n_uk - [c == k]). Integer sums make the reduction exact.
  const std::size_t len = (raters + 1) * v * v;
  std::vector<std::uint64_t> pairs(len, 0);
  std::uint64_t* acc = pairs.data();
  std::size_t n_units = 0;
  const auto n = static_cast<std::ptrdiff_t>(m.n_units());

#pragma omp parallel reduction(+ : acc[:len], n_units)
  {
    std::vector<std::uint64_t> counts(v);
#pragma omp for schedule(static)
    for (std::ptrdiff_t u = 0; u < n; ++u) {
      std::fill(counts.begin(), counts.end(), 0);
      std::size_t mu = 0;
      for (std::size_t r = 0; r < raters; ++r) {
        const int c = d.cells[static_cast<std::size_t>(u) * raters + r];
        if (c >= 0) {
          ++counts[static_cast<std::size_t>(c)];
          ++mu;
        }
      }
      if (mu < 2) continue;
      ++n_units;
      std::uint64_t* block = acc + mu * v * v;
      for (std::size_t c = 0; c < v; ++c) {
        if (counts[c] == 0) continue;
        for (std::size_t k = 0; k < v; ++k) {
          block[c * v + k] += counts[c] * (c == k ? counts[k] - 1 : counts[k]);
        }
      }
    }
  }

  check_scorable(n_units, d.pairable_categories);
  std::vector<std::vector<double>> o(v, std::vector<double>(v, 0.0));
  for (std::size_t mu = 2; mu <= raters; ++mu) {
    const std::uint64_t* block = pairs.data() + mu * v * v;
    for (std::size_t c = 0; c < v; ++c) {
      for (std::size_t k = 0; k < v; ++k) {
        o[c][k] += static_cast<double>(block[c * v + k]) / static_cast<double>(mu - 1);
      }
    }
  }
  return finish_alpha(o, n_units);
}

namespace reference {

AgreementReport krippendorff_alpha(const ReliabilityMatrix& m) {
  const DenseCodes d = densify(m);
  const std::size_t v = d.categories;
  std::vector<std::vector<double>> o(v, std::vector<double>(v, 0.0));
  std::size_t n_units = 0;
  for (std::size_t u = 0; u < m.n_units(); ++u) {
    std::vector<int> values;
    for (std::size_t r = 0; r < m.n_raters(); ++r) {
      const int c = d.cells[u * m.n_raters() + r];
      if (c >= 0) values.push_back(c);
    }
    if (values.size() < 2) continue;
    ++n_units;
    const double w = 1.0 / static_cast<double>(values.size() - 1);
    for (std::size_t i = 0; i < values.size(); ++i) {
      for (std::size_t j = 0; j < values.size(); ++j) {
        if (i != j) o[values[i]][values[j]] += w;
      }
    }
  }
  check_scorable(n_units, d.pairable_categories);
  return finish_alpha(o, n_units);
}

}  // namespace reference

AgreementReport cohens_kappa(std::span<const int> a, std::span<const int> b) {
  if (a.size() != b.size()) {
    throw Error("cohens_kappa: length mismatch (" + std::to_string(a.size()) + " vs " +
                std::to_string(b.size()) + ")");
  }
  if (a.empty()) throw Error("cohens_kappa: empty sequences");
  std::map<int, std::pair<std::size_t, std::size_t>> marg;
  std::size_t agree = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ++marg[a[i]].first;
    ++marg[b[i]].second;
    agree += a[i] == b[i] ? 1 : 0;
  }
  if (marg.size() == 1) {
    throw DegenerateDataError("cohens_kappa: degenerate data, both sequences constant and equal (p_e = 1)");
  }
  const double n = static_cast<double>(a.size());
  AgreementReport r;
  r.n_items = a.size();
  r.observed_agreement = static_cast<double>(agree) / n;
  for (const auto& [cat, counts] : marg) {
    r.expected_agreement += (static_cast<double>(counts.first) / n) * (static_cast<double>(counts.second) / n);
  }
  r.coefficient = (r.observed_agreement - r.expected_agreement) / (1.0 - r.expected_agreement);
  return r;
}

AgreementReport cohens_kappa(std::span<const std::string> a, std::span<const std::string> b) {
  std::map<std::string_view, int> code;
  for (const auto& s : a) code.emplace(s, 0);
  for (const auto& s : b) code.emplace(s, 0);
  int next = 0;
  for (auto& [s, c] : code) c = next++;
  std::vector<int> ca, cb;
  ca.reserve(a.size());
  cb.reserve(b.size());
  for (const auto& s : a) ca.push_back(code[s]);
  for (const auto& s : b) cb.push_back(code[s]);
  return cohens_kappa(std::span<const int>(ca), std::span<const int>(cb));
}

std::string alpha_to_json(const AgreementReport& r) {
  nlohmann::ordered_json j;
  j["alpha"] = r.coefficient;
  j["observed_disagreement"] = r.observed_disagreement;
  j["expected_disagreement"] = r.expected_disagreement;
  j["n_units"] = r.n_units;
  j["n_values"] = r.n_values;
  return j.dump(2) + "\n";
}

std::string kappa_to_json(const AgreementReport& r) {
  nlohmann::ordered_json j;
  j["kappa"] = r.coefficient;
  j["observed_agreement"] = r.observed_agreement;
  j["expected_agreement"] = r.expected_agreement;
  j["n_items"] = r.n_items;
  return j.dump(2) + "\n";
}

}  // namespace emolex
