#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "rxsentinel/errors.hpp"
#include "rxsentinel/orders.hpp"
#include "rxsentinel/service/artifact.hpp"
#include "rxsentinel/service/pipeline.hpp"
#include "rxsentinel/service/server.hpp"
#include "rxsentinel/service/study.hpp"
#include "rxsentinel/synth.hpp"

namespace fs = std::filesystem;
using namespace rxsentinel;

namespace {

constexpr const char* kStateEnv = "RXSENTINEL_STATE_DIR";
constexpr const char* kDefaultStateDir = "rxsentinel-state";

service::ReviewServer* g_server = nullptr;

void on_signal(int) {
  if (g_server != nullptr) g_server->stop();
}

std::string state_dir() {
  const char* env = std::getenv(kStateEnv);
  return env != nullptr && *env != '\0' ? std::string(env) : std::string(kDefaultStateDir);
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream out(p);
  if (!out) throw Error("cannot write " + p.string());
  return out;
}

const std::vector<std::string> kKinds = {"frequency", "iforest", "autoencoder", "ganomaly"};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Medication-order anomaly detection and review service"};
  app.require_subcommand(1);

  // synth
  std::uint64_t seed = 20200401;
  std::string preset = "acceptance";
  std::string out;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic order log with planted anomalies");
  synth_cmd->add_option("--seed", seed, "Generator seed");
  synth_cmd->add_option("--preset", preset, "acceptance or default")
      ->check(CLI::IsMember({"acceptance", "default"}));
  synth_cmd->add_option("--out", out, "Output directory")->required();

  // train / retrain
  std::string model;
  std::string data;
  std::string as_of;
  int window = service::kDefaultWindowYears;
  std::uint64_t train_seed = 1;
  std::optional<std::size_t> epochs;
  int months = 1;
  auto* train_cmd = app.add_subcommand("train", "Train one model artifact");
  auto* retrain_cmd = app.add_subcommand("retrain", "Train one artifact per month on a rolling window");
  for (auto* c : {train_cmd, retrain_cmd}) {
    c->add_option("--model", model, "frequency, iforest, autoencoder or ganomaly")
        ->required()
        ->check(CLI::IsMember(kKinds));
    c->add_option("--data", data, "Order log (JSONL)")->required()->check(CLI::ExistingFile);
    c->add_option("--window-years", window, "Training window in years")->check(CLI::PositiveNumber);
    c->add_option("--seed", train_seed, "Training seed");
    c->add_option("--epochs", epochs, "Override the fixed epoch count of neural models");
  }
  train_cmd->add_option("--as-of", as_of, "Training date YYYY-MM-DD")->required();
  train_cmd->add_option("--out", out, "Artifact path")->required();
  retrain_cmd->add_option("--as-of", as_of, "First month YYYY-MM")->required();
  retrain_cmd->add_option("--months", months, "Number of monthly artifacts")->check(CLI::PositiveNumber);
  retrain_cmd->add_option("--out", out, "Output directory")->required();

  // score
  std::optional<std::string> thresholds;
  auto* score_cmd = app.add_subcommand("score", "Score profiles with an artifact");
  score_cmd->add_option("--model", model, "Artifact path")->required()->check(CLI::ExistingFile);
  score_cmd->add_option("--data", data, "Profiles (JSONL)")->required()->check(CLI::ExistingFile);
  score_cmd->add_option("--thresholds", thresholds, "Threshold file; adds a class column")
      ->check(CLI::ExistingFile);
  score_cmd->add_option("--out", out, "Score file path")->required();

  // calibrate
  auto* calibrate_cmd = app.add_subcommand("calibrate", "Per-department thresholds from a score file");
  calibrate_cmd->add_option("--data", data, "Score file")->required()->check(CLI::ExistingFile);
  calibrate_cmd->add_option("--out", out, "Threshold file path")->required();

  // evaluate
  std::string truth;
  auto* evaluate_cmd = app.add_subcommand("evaluate", "Metrics of a score file against labeled profiles");
  evaluate_cmd->add_option("--data", data, "Score file")->required()->check(CLI::ExistingFile);
  evaluate_cmd->add_option("--truth", truth, "Labeled profiles (JSONL)")
      ->required()
      ->check(CLI::ExistingFile);
  evaluate_cmd->add_option("--out", out, "Report directory")->required();

  // serve
  std::string host = "127.0.0.1";
  int port = 8080;
  double calibration_fraction = 0.33;
  auto* serve_cmd = app.add_subcommand(
      "serve", std::string("Run the review service; state lives in $") + kStateEnv + " or ./" +
                   kDefaultStateDir);
  serve_cmd->add_option("--model", model, "Artifact path")->required()->check(CLI::ExistingFile);
  serve_cmd->add_option("--data", data, "Profile queue (JSONL)")->required()->check(CLI::ExistingFile);
  serve_cmd->add_option("--thresholds", thresholds, "Fallback threshold file")->check(CLI::ExistingFile);
  serve_cmd->add_option("--host", host, "Listen address");
  serve_cmd->add_option("--port", port, "Listen port (0 picks one)");
  serve_cmd->add_option("--calibration-fraction", calibration_fraction,
                        "Share of each department's patients used for calibration")
      ->check(CLI::Range(0.0, 1.0));

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth_cmd->parsed()) {
      const auto cfg = preset == "acceptance" ? synth::acceptance_config(seed)
                                              : synth::default_config(seed);
      const auto corpus = synth::generate_corpus(cfg);
      fs::create_directories(out);
      auto orders_out = open_out(fs::path(out) / "orders.jsonl");
      orders::write_order_log(orders_out, corpus.log);
      auto truth_out = open_out(fs::path(out) / "truth.jsonl");
      synth::write_ground_truth(truth_out, corpus.truth);
      const auto profiles = synth::labeled_profiles(corpus);
      auto profiles_out = open_out(fs::path(out) / "profiles.jsonl");
      orders::write_profiles(profiles_out, profiles);
      std::cout << corpus.log.hospitalizations.size() << " hospitalizations, "
                << corpus.log.orders.size() << " orders, " << profiles.size() << " profiles\n";
    } else if (train_cmd->parsed() || retrain_cmd->parsed()) {
      service::TrainOptions opts;
      opts.kind = service::parse_model_kind(model);
      opts.window_years = window;
      opts.seed = train_seed;
      opts.epochs = epochs;
      if (train_cmd->parsed()) {
        opts.as_of = Date::parse(as_of);
        std::cout << service::cli_train(data, out, opts) << "  " << out << "\n";
      } else {
        for (const auto& r : service::cli_retrain_schedule(data, out, as_of, months, opts)) {
          std::cout << r.month << "  " << r.digest << "  " << r.path << "\n";
        }
      }
    } else if (score_cmd->parsed()) {
      service::cli_score(model, data, thresholds, out);
    } else if (calibrate_cmd->parsed()) {
      service::cli_calibrate(data, out);
      const auto t = eval::read_thresholds_file(out);
      for (const auto& w : t.warnings) {
        std::cerr << "warning: " << orders::to_string(w.department) << " omitted (" << w.reason
                  << ", " << w.samples << " scores)\n";
      }
    } else if (evaluate_cmd->parsed()) {
      const auto report = service::cli_evaluate(data, truth, out);
      std::cout << report.dump(2) << "\n";
    } else if (serve_cmd->parsed()) {
      const service::Artifact a = service::load_artifact(model);
      const auto profiles = orders::read_profiles_file(data);
      const auto scored = service::score_profiles(a, profiles);
      std::vector<service::QueueEntry> queue;
      for (std::size_t i = 0; i < profiles.size(); ++i) {
        std::optional<std::vector<std::string>> flags;
        if (scored[i].flags) {
          flags.emplace();
          for (const auto& d : *scored[i].flags) flags->push_back(d.code());
        }
        queue.push_back({profiles[i], scored[i].score, std::move(flags)});
      }
      std::optional<eval::ThresholdSet> t;
      const std::string digest = service::artifact_digest(a);
      if (thresholds) {
        t = eval::read_thresholds_file(*thresholds);
        if (t->artifact_digest != digest) {
          throw ConfigError("thresholds were calibrated for a different artifact");
        }
      }
      service::StudyConfig cfg;
      cfg.calibration_fraction = calibration_fraction;
      service::StudyState state(std::move(queue), std::move(t), cfg, digest, state_dir());
      service::ReviewServer server(state);
      int bound = port;
      if (port == 0) {
        bound = server.bind_any_port(host);
        if (bound < 0) throw Error("cannot bind " + host);
      } else if (!server.bind(host, port)) {
        throw Error("cannot bind " + host + ":" + std::to_string(port));
      }
      g_server = &server;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      std::cout << "listening on http://" << host << ":" << bound << " (state " << state_dir()
                << ")" << std::endl;
      server.listen_after_bind();
      g_server = nullptr;
    }
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
