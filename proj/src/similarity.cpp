#include "mixopt/similarity.hpp"

#include "mixopt/threads.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <set>
#include <sstream>

namespace mixopt {

namespace {

using Payload = PredictionStore::Payload;

struct Matched {
  // Payloads of (model_a, model_b) on the shared eval examples, ascending
  // example_id. ids runs parallel to rows.
  std::vector<std::pair<const Payload*, const Payload*>> rows;
  std::vector<const std::string*> ids;
  std::size_t union_size = 0;
  bool any_records = false;
};

bool has_field(const Payload& p, bool need_dist) {
  return need_dist ? p.dist.has_value() : p.logprob.has_value();
}

Matched match(const PredictionStore& store, const TaskId& model_a,
              const TaskId& model_b, const TaskId& eval, bool need_dist) {
  Matched m;
  const auto* ca = store.cell(model_a, eval);
  const auto* cb = store.cell(model_b, eval);
  m.any_records = (ca && !ca->empty()) || (cb && !cb->empty()) ||
                  store.example_count(eval) > 0;
  if (!ca || !cb) return m;

  std::set<std::string> ids;
  for (const auto& [id, p] : *ca) {
    if (has_field(p, need_dist)) ids.insert(id);
  }
  for (const auto& [id, p] : *cb) {
    if (has_field(p, need_dist)) ids.insert(id);
  }
  m.union_size = ids.size();

  // Both cells are ordered maps, so the intersection comes out in ascending
  // example_id order.
  for (const auto& [id, pa] : *ca) {
    if (!has_field(pa, need_dist)) continue;
    auto it = cb->find(id);
    if (it == cb->end() || !has_field(it->second, need_dist)) continue;
    m.rows.emplace_back(&pa, &it->second);
    m.ids.push_back(&it->first);
  }
  return m;
}

void check_direction(const Matched& m, const TaskId& model_a,
                     const TaskId& model_b, const TaskId& eval,
                     const char* field) {
  if (!m.rows.empty()) return;
  if (!m.any_records) {
    fail(ErrorCode::EmptyEvaluationSet,
         "no examples recorded for eval task '" + eval.str() + "'");
  }
  fail(ErrorCode::MissingCounterpart,
       "no example of '" + eval.str() + "' carries " + field +
           " records from both '" + model_a.str() + "' and '" + model_b.str() +
           "'");
}

void warn_coverage(const Matched& m, const TaskId& ti, const TaskId& tj,
                   const TaskId& eval, std::vector<std::string>* warnings) {
  if (!warnings || m.rows.size() == m.union_size) return;
  std::ostringstream os;
  os << "pair (" << ti.str() << ", " << tj.str() << "): only " << m.rows.size()
     << "/" << m.union_size << " examples of '" << eval.str()
     << "' are present for both models";
  warnings->push_back(os.str());
}

// Mean of (logprob_a - logprob_b) over the matched examples.
double mean_logratio(const Matched& m) {
  double sum = 0.0;
  for (const auto& [pa, pb] : m.rows) {
    sum += *pa->logprob - *pb->logprob;
  }
  return sum / static_cast<double>(m.rows.size());
}

void require_distinct(const TaskId& ti, const TaskId& tj, const char* op) {
  if (ti == tj) {
    throw std::invalid_argument(std::string(op) +
                                " requires two distinct tasks");
  }
}

}  // namespace

double pmi_pair(const PredictionStore& store, const TaskId& ti,
                const TaskId& tj, std::vector<std::string>* warnings) {
  require_distinct(ti, tj, "pmi_pair");
  // Over D_tj the ratio is P_i / P_j; over D_ti it flips.
  Matched over_j = match(store, ti, tj, tj, /*need_dist=*/false);
  check_direction(over_j, ti, tj, tj, "logprob");
  Matched over_i = match(store, tj, ti, ti, /*need_dist=*/false);
  check_direction(over_i, tj, ti, ti, "logprob");
  warn_coverage(over_j, ti, tj, tj, warnings);
  warn_coverage(over_i, ti, tj, ti, warnings);
  return 0.5 * (mean_logratio(over_j) + mean_logratio(over_i));
}

double jsd_sample(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) {
    std::ostringstream os;
    os << "distributions have lengths " << p.size() << " and " << q.size();
    fail(ErrorCode::LengthMismatch, os.str());
  }
  double kl_p = 0.0;
  double kl_q = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double m = 0.5 * (p[i] + q[i]);
    if (p[i] > 0.0) kl_p += p[i] * std::log(p[i] / m);
    if (q[i] > 0.0) kl_q += q[i] * std::log(q[i] / m);
  }
  return 0.5 * kl_p + 0.5 * kl_q;
}

namespace {

double mean_jsd(const Matched& m, const TaskId& eval) {
  double sum = 0.0;
  for (std::size_t r = 0; r < m.rows.size(); ++r) {
    const auto& [pa, pb] = m.rows[r];
    if (pa->dist->size() != pb->dist->size()) {
      std::ostringstream os;
      os << "dist lengths " << pa->dist->size() << " vs " << pb->dist->size()
         << " for example '" << *m.ids[r] << "' of '" << eval.str() << "'";
      fail(ErrorCode::LengthMismatch, os.str());
    }
    sum += jsd_sample(*pa->dist, *pb->dist);
  }
  return sum / static_cast<double>(m.rows.size());
}

}  // namespace

double jsd_pair(const PredictionStore& store, const TaskId& ti,
                const TaskId& tj, std::vector<std::string>* warnings) {
  require_distinct(ti, tj, "jsd_pair");
  Matched over_j = match(store, ti, tj, tj, /*need_dist=*/true);
  check_direction(over_j, ti, tj, tj, "dist");
  Matched over_i = match(store, tj, ti, ti, /*need_dist=*/true);
  check_direction(over_i, tj, ti, ti, "dist");
  warn_coverage(over_j, ti, tj, tj, warnings);
  warn_coverage(over_i, ti, tj, ti, warnings);
  return 0.5 * (mean_jsd(over_j, tj) + mean_jsd(over_i, ti));
}

namespace {

// Every unordered pair must be computable before any score is computed;
// failures are reported all at once.
void check_all_pairs(const PredictionStore& store, Metric metric) {
  const auto& tasks = store.tasks();
  const bool need_dist = metric == Metric::JSD;
  std::vector<std::string> missing;
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    for (std::size_t j = i + 1; j < tasks.size(); ++j) {
      const Matched over_j =
          match(store, tasks[i], tasks[j], tasks[j], need_dist);
      const Matched over_i =
          match(store, tasks[j], tasks[i], tasks[i], need_dist);
      if (over_j.rows.empty() || over_i.rows.empty()) {
        missing.push_back("(" + tasks[i].str() + ", " + tasks[j].str() + ")");
      }
    }
  }
  if (!missing.empty()) {
    std::ostringstream os;
    os << missing.size() << " pair(s) lack matched records under "
       << metric_name(metric) << ":";
    for (const auto& p : missing) os << " " << p;
    fail(ErrorCode::IncompletePair, os.str());
  }
}

double pair_score(const PredictionStore& store, const SimilarityOptions& opts,
                  const TaskId& ti, const TaskId& tj,
                  std::vector<std::string>* warnings) {
  if (opts.metric == Metric::PMI) {
    return pmi_pair(store, ti, tj, warnings);
  }
  double v = jsd_pair(store, ti, tj, warnings);
  if (opts.jsd_complement) v = std::log(2.0) - v;
  return v;
}

SimilarityMatrix assemble(const PredictionStore& store, Metric metric,
                          const std::vector<double>& pair_values) {
  const int n = store.task_count();
  Eigen::MatrixXd values = Eigen::MatrixXd::Zero(n, n);
  std::size_t k = 0;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j, ++k) {
      values(i, j) = pair_values[k];
      values(j, i) = pair_values[k];
    }
  }
  return validate_similarity(store.tasks(), std::move(values), metric);
}

}  // namespace

SimilarityMatrix build_similarity_serial(const PredictionStore& store,
                                         const SimilarityOptions& options,
                                         std::vector<std::string>* warnings) {
  if (options.metric == Metric::EXTERNAL) {
    throw std::invalid_argument("EXTERNAL matrices are loaded, not computed");
  }
  const int n = store.task_count();
  if (n == 0) {
    fail(ErrorCode::DimensionMismatch, "prediction store has no tasks");
  }
  check_all_pairs(store, options.metric);

  const auto& tasks = store.tasks();
  std::vector<double> pair_values;
  pair_values.reserve(static_cast<std::size_t>(n) * (n - 1) / 2);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      pair_values.push_back(
          pair_score(store, options, tasks[i], tasks[j], warnings));
    }
  }
  return assemble(store, options.metric, pair_values);
}

SimilarityMatrix build_similarity(const PredictionStore& store,
                                  const SimilarityOptions& options,
                                  std::vector<std::string>* warnings) {
  if (options.metric == Metric::EXTERNAL) {
    throw std::invalid_argument("EXTERNAL matrices are loaded, not computed");
  }
  const int n = store.task_count();
  if (n == 0) {
    fail(ErrorCode::DimensionMismatch, "prediction store has no tasks");
  }
  check_all_pairs(store, options.metric);

  const auto& tasks = store.tasks();
  std::vector<std::pair<int, int>> pairs;
  pairs.reserve(static_cast<std::size_t>(n) * (n - 1) / 2);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) pairs.emplace_back(i, j);
  }

  const auto total = static_cast<std::int64_t>(pairs.size());
  std::vector<double> pair_values(pairs.size(), 0.0);
  std::vector<std::vector<std::string>> pair_warnings(pairs.size());
  std::vector<std::exception_ptr> errors(pairs.size());
  const int threads = resolve_threads(options.threads);

#pragma omp parallel for schedule(dynamic) num_threads(threads)
  for (std::int64_t k = 0; k < total; ++k) {
    try {
      const auto [i, j] = pairs[static_cast<std::size_t>(k)];
      pair_values[static_cast<std::size_t>(k)] =
          pair_score(store, options, tasks[static_cast<std::size_t>(i)],
                     tasks[static_cast<std::size_t>(j)],
                     warnings ? &pair_warnings[static_cast<std::size_t>(k)]
                              : nullptr);
    } catch (...) {
      errors[static_cast<std::size_t>(k)] = std::current_exception();
    }
  }

  for (const auto& err : errors) {
    if (err) std::rethrow_exception(err);
  }
  if (warnings) {
    for (auto& w : pair_warnings) {
      warnings->insert(warnings->end(), w.begin(), w.end());
    }
  }
  return assemble(store, options.metric, pair_values);
}

}  // namespace mixopt
