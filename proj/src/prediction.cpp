#include "mixopt/prediction.hpp"

#include <json.hpp>

#include <cmath>
#include <sstream>

namespace mixopt {

namespace {

std::string at_line(int line) {
  return line > 0 ? " (line " + std::to_string(line) + ")" : "";
}

}  // namespace

const PredictionStore::Cell* PredictionStore::cell(const TaskId& model,
                                                   const TaskId& eval) const {
  auto it = cells_.find({model.str(), eval.str()});
  return it == cells_.end() ? nullptr : &it->second;
}

int PredictionStore::example_count(const TaskId& eval) const {
  auto it = eval_examples_.find(eval.str());
  return it == eval_examples_.end() ? 0 : static_cast<int>(it->second.size());
}

void PredictionStore::add(PredictionRecord rec, int line) {
  if (!rec.logprob && !rec.dist) {
    fail(ErrorCode::MalformedRecord,
         "record needs at least one of logprob, dist" + at_line(line));
  }
  if (rec.example_id.empty()) {
    fail(ErrorCode::MalformedRecord, "empty example_id" + at_line(line));
  }
  if (rec.logprob) {
    double lp = *rec.logprob;
    if (std::isnan(lp)) {
      fail(ErrorCode::MalformedRecord, "logprob is NaN" + at_line(line));
    }
    if (lp > 0.0) {
      fail(ErrorCode::MalformedRecord,
           "logprob > 0 (probability above 1)" + at_line(line));
    }
    rec.logprob = std::max(lp, kLogProbFloor);
  }
  if (rec.dist) {
    auto& d = *rec.dist;
    if (d.empty()) {
      fail(ErrorCode::MalformedRecord, "empty dist" + at_line(line));
    }
    double sum = 0.0;
    for (double& v : d) {
      if (!std::isfinite(v)) {
        fail(ErrorCode::MalformedRecord,
             "non-finite dist entry" + at_line(line));
      }
      if (v < 0.0) v = 0.0;
      sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-6) {
      std::ostringstream os;
      os << "dist sums to " << sum << at_line(line);
      fail(ErrorCode::DistributionNotNormalized, os.str());
    }
    for (double& v : d) v /= sum;
  }

  for (const TaskId* t : {&rec.model_task, &rec.eval_task}) {
    if (task_index_.insert(t->str()).second) {
      tasks_.push_back(*t);
    }
  }
  eval_examples_[rec.eval_task.str()].insert(rec.example_id);

  auto& cell = cells_[{rec.model_task.str(), rec.eval_task.str()}];
  auto [it, inserted] =
      cell.emplace(rec.example_id, Payload{rec.logprob, std::move(rec.dist)});
  if (!inserted) {
    fail(ErrorCode::DuplicateKey,
         "duplicate record for (" + rec.model_task.str() + ", " +
             rec.eval_task.str() + ", " + rec.example_id + ")" + at_line(line));
  }
}

PredictionStore ingest(const std::vector<PredictionRecord>& records) {
  PredictionStore store;
  int line = 0;
  for (const auto& rec : records) {
    store.add(rec, ++line);
  }
  return store;
}

PredictionStore ingest(std::istream& in) {
  PredictionStore store;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;

    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorCode::MalformedRecord,
           std::string(e.what()) + at_line(line_no));
    }
    try {
      PredictionRecord rec{TaskId(j.at("model_task").get<std::string>()),
                           TaskId(j.at("eval_task").get<std::string>()),
                           j.at("example_id").get<std::string>(),
                           std::nullopt,
                           std::nullopt};
      if (j.contains("logprob") && !j["logprob"].is_null()) {
        if (!j["logprob"].is_number()) {
          fail(ErrorCode::MalformedRecord,
               "logprob must be a number" + at_line(line_no));
        }
        rec.logprob = j["logprob"].get<double>();
      }
      if (j.contains("dist") && !j["dist"].is_null()) {
        rec.dist = j["dist"].get<std::vector<double>>();
      }
      store.add(std::move(rec), line_no);
    } catch (const Error&) {
      throw;
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorCode::MalformedRecord,
           std::string(e.what()) + at_line(line_no));
    }
  }
  return store;
}

}  // namespace mixopt
