#include "mixopt/io.hpp"

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>

namespace mixopt::io {

namespace {

using nlohmann::json;

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) {
    fail(ErrorCode::IoError, "cannot open '" + path.string() + "' for writing");
  }
  return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    fail(ErrorCode::IoError, "cannot open '" + path.string() + "' for reading");
  }
  return in;
}

json parse_file(const std::filesystem::path& path) {
  auto in = open_in(path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    fail(ErrorCode::MalformedRecord,
         "'" + path.string() + "': " + e.what());
  }
}

void dump_to(const std::filesystem::path& path, const json& j) {
  auto out = open_out(path);
  out << j.dump(2) << "\n";
  if (!out) {
    fail(ErrorCode::IoError, "write to '" + path.string() + "' failed");
  }
}

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

json vector_to_json(const Eigen::VectorXd& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

Eigen::VectorXd vector_from_json(const json& arr) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(arr.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    v(i) = arr.at(static_cast<size_t>(i)).get<double>();
  }
  return v;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) {
    while (!field.empty() && (field.back() == '\r' || field.back() == ' ')) {
      field.pop_back();
    }
    size_t start = field.find_first_not_of(' ');
    fields.push_back(start == std::string::npos ? "" : field.substr(start));
  }
  if (!line.empty() && line.back() == ',') fields.push_back("");
  return fields;
}

json solution_to_json(const MixtureSolution& sol) {
  json j;
  json tasks = json::array();
  for (const auto& t : sol.tasks) tasks.push_back(t.str());
  j["tasks"] = std::move(tasks);
  j["p"] = vector_to_json(sol.p);
  j["nu"] = sol.nu;
  j["energy"] = sol.energy;
  j["active_set"] = sol.active_set;
  j["solver_path"] = solver_path_name(sol.solver_path);
  return j;
}

}  // namespace

void write_similarity_json(const std::filesystem::path& path,
                           const SimilarityMatrix& s) {
  json j;
  json tasks = json::array();
  for (const auto& t : s.tasks) tasks.push_back(t.str());
  j["tasks"] = std::move(tasks);
  j["metric"] = metric_name(s.metric);
  json rows = json::array();
  for (Eigen::Index i = 0; i < s.values.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index c = 0; c < s.values.cols(); ++c) {
      row.push_back(s.values(i, c));
    }
    rows.push_back(std::move(row));
  }
  j["matrix"] = std::move(rows);
  dump_to(path, j);
}

namespace {

SimilarityMatrix read_similarity_json(const std::filesystem::path& path) {
  const json j = parse_file(path);
  try {
    std::vector<TaskId> tasks;
    for (const auto& t : j.at("tasks")) {
      tasks.emplace_back(t.get<std::string>());
    }
    const Metric metric = metric_from_name(j.at("metric").get<std::string>());
    const auto& rows = j.at("matrix");
    Eigen::MatrixXd values(rows.size(), rows.size());
    for (size_t r = 0; r < rows.size(); ++r) {
      const auto& row = rows.at(r);
      if (row.size() != rows.size()) {
        fail(ErrorCode::DimensionMismatch,
             "'" + path.string() + "': matrix row " + std::to_string(r) +
                 " has wrong length");
      }
      for (size_t c = 0; c < row.size(); ++c) {
        values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
            row.at(c).get<double>();
      }
    }
    return validate_similarity(std::move(tasks), std::move(values), metric);
  } catch (const json::exception& e) {
    fail(ErrorCode::MalformedRecord, "'" + path.string() + "': " + e.what());
  }
}

// Header row = task ids (an empty leading cell is allowed); each data row may
// repeat its task id in the first column. CSV carries no metric tag, so the
// matrix is treated as EXTERNAL.
SimilarityMatrix read_similarity_csv(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::string line;
  if (!std::getline(in, line)) {
    fail(ErrorCode::MalformedRecord, "'" + path.string() + "' is empty");
  }
  std::vector<std::string> header = split_csv_line(line);
  if (!header.empty() && header.front().empty()) {
    header.erase(header.begin());
  }
  if (header.empty()) {
    fail(ErrorCode::MalformedRecord,
         "'" + path.string() + "': header row has no task ids");
  }
  std::vector<TaskId> tasks;
  for (const auto& h : header) tasks.emplace_back(h);

  const auto n = static_cast<Eigen::Index>(tasks.size());
  Eigen::MatrixXd values(n, n);
  for (Eigen::Index r = 0; r < n; ++r) {
    if (!std::getline(in, line)) {
      fail(ErrorCode::DimensionMismatch,
           "'" + path.string() + "': expected " + std::to_string(n) +
               " data rows");
    }
    std::vector<std::string> fields = split_csv_line(line);
    if (static_cast<Eigen::Index>(fields.size()) == n + 1 &&
        fields.front() == tasks[static_cast<size_t>(r)].str()) {
      fields.erase(fields.begin());
    }
    if (static_cast<Eigen::Index>(fields.size()) != n) {
      fail(ErrorCode::DimensionMismatch,
           "'" + path.string() + "': row " + std::to_string(r) + " has " +
               std::to_string(fields.size()) + " fields, expected " +
               std::to_string(n));
    }
    for (Eigen::Index c = 0; c < n; ++c) {
      try {
        values(r, c) = std::stod(fields[static_cast<size_t>(c)]);
      } catch (const std::exception&) {
        fail(ErrorCode::MalformedRecord,
             "'" + path.string() + "': bad number '" +
                 fields[static_cast<size_t>(c)] + "'");
      }
    }
  }
  return validate_similarity(std::move(tasks), std::move(values),
                             Metric::EXTERNAL);
}

}  // namespace

SimilarityMatrix read_similarity(const std::filesystem::path& path) {
  if (path.extension() == ".csv") {
    return read_similarity_csv(path);
  }
  return read_similarity_json(path);
}

void write_spectrum_json(const std::filesystem::path& path,
                         const SpectrumReport& report) {
  json j;
  j["eigenvalues"] = vector_to_json(report.eigenvalues);
  j["lambda_min"] = report.lambda_min;
  j["lambda_max"] = report.lambda_max;
  j["gamma_lower_bound"] = report.gamma_lower_bound;
  dump_to(path, j);
}

void write_spectrum_csv(const std::filesystem::path& path,
                        const SpectrumReport& report) {
  auto out = open_out(path);
  out << "index,eigenvalue\n";
  for (Eigen::Index i = 0; i < report.eigenvalues.size(); ++i) {
    out << i << "," << fmt_double(report.eigenvalues(i)) << "\n";
  }
}

void write_solution_json(const std::filesystem::path& path,
                         const SolutionFile& file) {
  json j = solution_to_json(file.solution);
  j["beta"] = file.params.beta;
  j["lambda"] = file.params.lambda;
  j["shift"] = file.shift;
  j["kkt_residual"] = file.kkt_residual;
  dump_to(path, j);
}

SolutionFile read_solution_json(const std::filesystem::path& path) {
  const json j = parse_file(path);
  try {
    SolutionFile file;
    for (const auto& t : j.at("tasks")) {
      file.solution.tasks.emplace_back(t.get<std::string>());
    }
    file.solution.p = vector_from_json(j.at("p"));
    file.solution.nu = j.at("nu").get<double>();
    file.solution.energy = j.at("energy").get<double>();
    file.solution.active_set = j.at("active_set").get<std::vector<int>>();
    const std::string path_name = j.at("solver_path").get<std::string>();
    if (path_name == "ACTIVE_SET") {
      file.solution.solver_path = SolverPath::ACTIVE_SET;
    } else if (path_name == "PROJECTED_GRADIENT") {
      file.solution.solver_path = SolverPath::PROJECTED_GRADIENT;
    } else {
      file.solution.solver_path = SolverPath::INTERIOR;
    }
    file.params.beta = j.at("beta").get<double>();
    file.params.lambda = j.at("lambda").get<double>();
    file.shift = j.at("shift").get<double>();
    file.kkt_residual = j.at("kkt_residual").get<double>();
    if (file.solution.p.size() !=
        static_cast<Eigen::Index>(file.solution.tasks.size())) {
      fail(ErrorCode::DimensionMismatch,
           "'" + path.string() + "': p length does not match tasks");
    }
    return file;
  } catch (const json::exception& e) {
    fail(ErrorCode::MalformedRecord, "'" + path.string() + "': " + e.what());
  }
}

void write_trace_json(const std::filesystem::path& path,
                      const DiscoveryTrace& trace) {
  json j;
  json tasks = json::array();
  for (const auto& t : trace.tasks) tasks.push_back(t.str());
  j["tasks"] = std::move(tasks);
  json selected = json::array();
  for (int i : trace.selected) {
    selected.push_back(trace.tasks[static_cast<size_t>(i)].str());
  }
  j["selected"] = std::move(selected);
  j["selected_indices"] = trace.selected;
  j["f_values"] = trace.f_values;
  j["marginal_gains"] = trace.marginal_gains;
  j["affinities"] = trace.affinities;
  json mixtures = json::array();
  for (const auto& m : trace.mixtures) {
    json jm;
    jm["p"] = vector_to_json(m.p);
    jm["nu"] = m.nu;
    jm["energy"] = m.energy;
    jm["active_set"] = m.active_set;
    jm["solver_path"] = solver_path_name(m.solver_path);
    mixtures.push_back(std::move(jm));
  }
  j["mixtures"] = std::move(mixtures);
  dump_to(path, j);
}

void write_gamma_report_json(const std::filesystem::path& path,
                             const GammaReport& report) {
  json j;
  j["n"] = report.n;
  j["beta"] = report.params.beta;
  j["lambda"] = report.params.lambda;
  j["trials"] = report.trials;
  j["seed"] = report.seed;
  j["gammas"] = report.gammas;
  j["eigen_bounds"] = report.eigen_bounds;
  j["min_gamma"] = report.min_gamma;
  j["theory_bound"] = report.theory_bound;
  j["degenerate_trials"] = report.degenerate_trials;
  dump_to(path, j);
}

void write_gamma_histogram_csv(const std::filesystem::path& path,
                               const GammaReport& report, int bins) {
  auto out = open_out(path);
  out << "bin,count\n";
  if (report.gammas.empty()) return;

  double lo = report.gammas.front();
  double hi = report.gammas.front();
  for (double g : report.gammas) {
    lo = std::min(lo, g);
    hi = std::max(hi, g);
  }
  if (!(hi > lo)) {
    out << fmt_double(lo) << "," << report.gammas.size() << "\n";
    return;
  }
  const double width = (hi - lo) / bins;
  std::vector<std::size_t> counts(static_cast<size_t>(bins), 0);
  for (double g : report.gammas) {
    auto b = static_cast<int>((g - lo) / width);
    if (b >= bins) b = bins - 1;
    ++counts[static_cast<size_t>(b)];
  }
  for (int b = 0; b < bins; ++b) {
    out << fmt_double(lo + b * width) << "," << counts[static_cast<size_t>(b)]
        << "\n";
  }
}

void write_plan_json(const std::filesystem::path& path,
                     const SamplingPlan& plan) {
  json j;
  json tasks = json::array();
  for (const auto& t : plan.tasks) tasks.push_back(t.str());
  j["tasks"] = std::move(tasks);
  j["counts"] = plan.counts;
  j["budget"] = plan.budget;
  j["seed"] = plan.seed;
  j["mode"] =
      plan.mode == AllocationMode::MULTINOMIAL ? "multinomial" : "expected";
  if (plan.capacities) {
    j["capacities"] = *plan.capacities;
  }
  dump_to(path, j);
}

void write_manifest_csv(const std::filesystem::path& path,
                        const SamplingPlan& plan) {
  if (!plan.manifest) {
    fail(ErrorCode::IoError, "plan has no manifest to write");
  }
  auto out = open_out(path);
  out << "task_id,instance_index\n";
  for (size_t i = 0; i < plan.manifest->size(); ++i) {
    for (std::uint64_t idx : (*plan.manifest)[i]) {
      out << plan.tasks[i].str() << "," << idx << "\n";
    }
  }
}

std::vector<std::uint64_t> read_capacities_csv(
    const std::filesystem::path& path, const std::vector<TaskId>& tasks) {
  auto in = open_in(path);
  std::map<std::string, std::uint64_t> by_id;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::vector<std::string> fields = split_csv_line(line);
    if (fields.size() != 2) {
      fail(ErrorCode::MalformedRecord,
           "'" + path.string() + "' line " + std::to_string(line_no) +
               ": expected task_id,size");
    }
    if (line_no == 1 && fields[0] == "task_id") continue;  // optional header
    try {
      by_id[fields[0]] = std::stoull(fields[1]);
    } catch (const std::exception&) {
      fail(ErrorCode::MalformedRecord,
           "'" + path.string() + "' line " + std::to_string(line_no) +
               ": bad size '" + fields[1] + "'");
    }
  }
  std::vector<std::uint64_t> capacities;
  capacities.reserve(tasks.size());
  for (const auto& t : tasks) {
    auto it = by_id.find(t.str());
    if (it == by_id.end()) {
      fail(ErrorCode::MalformedRecord,
           "'" + path.string() + "': no capacity for task '" + t.str() + "'");
    }
    capacities.push_back(it->second);
  }
  return capacities;
}

}  // namespace mixopt::io
