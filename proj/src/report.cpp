// SPDX-License-Identifier: Apache-2.0
#include "intruder/report.hpp"

#include "intruder/error.hpp"

#include <charconv>
#include <sstream>

namespace intruder {

std::string format_double(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

Json to_json(const ScanConfig& cfg) {
  return {{"epsilon", cfg.epsilon}, {"k", cfg.k}, {"use_right_vectors", cfg.use_right_vectors}};
}

Json to_json(const MatrixIntruderReport& r) {
  Json intruders = Json::array();
  for (const auto& in : r.intruders) {
    intruders.push_back({{"rank", in.rank}, {"max_cosine", in.max_cosine}, {"best_match", in.best_match}, {"sigma", in.sigma}});
  }
  return {{"name", r.name},
          {"n_intruders", r.n_intruders()},
          {"k_requested", r.k_requested},
          {"k_used", r.k_used},
          {"k_clamped", r.k_clamped()},
          {"intruders", std::move(intruders)}};
}

Json to_json(const ModelIntruderReport& r) {
  Json matrices = Json::array();
  for (const auto& m : r.matrices) {
    matrices.push_back(to_json(m));
  }
  return {{"config", to_json(r.config)}, {"total", r.total()}, {"matrices", std::move(matrices)}};
}

ModelIntruderReport model_report_from_json(const Json& j) {
  try {
    ModelIntruderReport r;
    r.config.epsilon = j.at("config").at("epsilon").get<double>();
    r.config.k = j.at("config").at("k").get<std::size_t>();
    r.config.use_right_vectors = j.at("config").value("use_right_vectors", false);
    for (const auto& m : j.at("matrices")) {
      MatrixIntruderReport mr;
      mr.name = m.at("name").get<std::string>();
      mr.k_requested = m.at("k_requested").get<std::size_t>();
      mr.k_used = m.at("k_used").get<std::size_t>();
      for (const auto& in : m.at("intruders")) {
        mr.intruders.push_back({in.at("rank").get<std::size_t>(), in.at("max_cosine").get<double>(),
                                in.at("best_match").get<std::size_t>(), in.at("sigma").get<double>()});
      }
      if (m.at("n_intruders").get<std::size_t>() != mr.intruders.size()) {
        throw InvalidInput("report for '" + mr.name + "' has an inconsistent n_intruders");
      }
      r.matrices.push_back(std::move(mr));
    }
    if (j.at("total").get<std::size_t>() != r.total()) {
      throw InvalidInput("report total does not match its matrices");
    }
    return r;
  } catch (const Json::exception& e) {
    throw InvalidInput(std::string("malformed intruder report: ") + e.what());
  }
}

std::string to_csv(const ModelIntruderReport& r) {
  std::ostringstream out;
  out << "name,n_intruders,indices,cosines,sigmas\n";
  for (const auto& m : r.matrices) {
    std::string indices, cosines, sigmas;
    for (std::size_t i = 0; i < m.intruders.size(); ++i) {
      const char* sep = i == 0 ? "" : ";";
      indices += sep + std::to_string(m.intruders[i].rank);
      cosines += sep + format_double(m.intruders[i].max_cosine);
      sigmas += sep + format_double(m.intruders[i].sigma);
    }
    out << m.name << ',' << m.n_intruders() << ',' << indices << ',' << cosines << ',' << sigmas << '\n';
  }
  return out.str();
}

Json sweep_to_json(std::span<const SweepPoint> points, const std::string& parameter_name) {
  Json rows = Json::array();
  for (const auto& p : points) {
    Json row;
    if (parameter_name == "k") {
      row[parameter_name] = static_cast<std::size_t>(p.parameter);
    } else {
      row[parameter_name] = p.parameter;
    }
    row["total"] = p.total;
    rows.push_back(std::move(row));
  }
  return {{"parameter", parameter_name}, {"points", std::move(rows)}};
}

std::string sweep_to_csv(std::span<const SweepPoint> points, const std::string& parameter_name) {
  std::ostringstream out;
  out << parameter_name << ",total\n";
  for (const auto& p : points) {
    if (parameter_name == "k") {
      out << static_cast<std::size_t>(p.parameter);
    } else {
      out << format_double(p.parameter);
    }
    out << ',' << p.total << '\n';
  }
  return out.str();
}

std::string grid_to_csv(const SimilarityGrid& grid) {
  std::ostringstream out;
  for (Eigen::Index i = 0; i < grid.grid.rows(); ++i) {
    for (Eigen::Index j = 0; j < grid.grid.cols(); ++j) {
      out << (j == 0 ? "" : ",") << format_double(grid.grid(i, j));
    }
    out << '\n';
  }
  return out.str();
}

Json to_json(const SimilarityGrid& grid) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < grid.grid.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < grid.grid.cols(); ++j) row.push_back(grid.grid(i, j));
    rows.push_back(std::move(row));
  }
  return {{"name", grid.name}, {"grid", std::move(rows)}};
}

Json plan_to_json(const ScalingPlan& plan) {
  Json j = Json::object();
  for (const auto& [name, e] : plan) {
    j[name] = {{"index", e.index}, {"lambda", e.lambda}};
  }
  return j;
}

ScalingPlan plan_from_json(const Json& j) {
  if (!j.is_object()) {
    throw InvalidInput("scaling plan must be a JSON object");
  }
  ScalingPlan plan;
  try {
    for (const auto& [name, e] : j.items()) {
      plan[name] = {e.at("index").get<std::size_t>(), e.at("lambda").get<double>()};
    }
  } catch (const Json::exception& e) {
    throw InvalidInput(std::string("malformed scaling plan: ") + e.what());
  }
  return plan;
}

Json to_json(const EvolutionTrace& trace) {
  Json snaps = Json::array();
  for (std::size_t s = 0; s < trace.steps.size(); ++s) {
    snaps.push_back({{"step", trace.steps[s]}, {"max_cosine", trace.max_cosine[s]}, {"sigma", trace.sigma[s]}});
  }
  return {{"tensor", trace.tensor}, {"ranks", trace.ranks}, {"snapshots", std::move(snaps)}};
}

Json to_json(const toy::TrainerConfig& cfg) {
  return {{"mode", std::string(toy::to_string(cfg.mode))},
          {"rank", cfg.rank},
          {"alpha", cfg.alpha},
          {"lr", cfg.lr},
          {"steps", cfg.steps},
          {"batch_size", cfg.batch_size},
          {"snapshot_interval", cfg.effective_snapshot_interval()},
          {"seed", cfg.seed}};
}

toy::TrainerConfig trainer_config_from_json(const Json& j) {
  try {
    toy::TrainerConfig cfg;
    cfg.mode = toy::parse_mode(j.at("mode").get<std::string>());
    cfg.rank = j.at("rank").get<std::size_t>();
    cfg.alpha = j.at("alpha").get<double>();
    cfg.lr = j.at("lr").get<double>();
    cfg.steps = j.at("steps").get<std::size_t>();
    cfg.batch_size = j.at("batch_size").get<std::size_t>();
    cfg.snapshot_interval = j.at("snapshot_interval").get<std::size_t>();
    cfg.seed = j.at("seed").get<std::uint64_t>();
    return cfg;
  } catch (const Json::exception& e) {
    throw InvalidInput(std::string("malformed trainer config: ") + e.what());
  }
}

Json run_summary(const toy::ToyRun& run, const std::vector<std::string>& snapshot_paths) {
  return {{"config", to_json(run.config)},
          {"task", run.task_id},
          {"final_accuracy", run.final_accuracy},
          {"forgetting", run.forgetting ? Json(*run.forgetting) : Json(nullptr)},
          {"per_step_loss", run.per_step_loss},
          {"snapshot_steps", run.snapshot_steps},
          {"snapshot_paths", snapshot_paths}};
}

std::string accuracy_matrix_csv(std::span<const toy::ContinualStage> stages) {
  std::ostringstream out;
  out << "stage";
  const std::size_t tasks = stages.empty() ? 0 : stages.front().accuracy.size();
  for (std::size_t t = 0; t < tasks; ++t) out << ",task" << t;
  out << '\n';
  for (const auto& s : stages) {
    out << s.stage;
    for (const auto& a : s.accuracy) {
      out << ',';
      if (a) out << format_double(*a);
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace intruder
