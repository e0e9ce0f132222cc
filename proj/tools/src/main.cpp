#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "slm/app/commands.hpp"
#include "slm/errors.hpp"

namespace {

// Leftover "--key value" or "--key=value" arguments become config overrides.
slm::app::KeyValues extras_to_overrides(const std::vector<std::string>& extras) {
  slm::app::KeyValues kv;
  for (std::size_t i = 0; i < extras.size(); ++i) {
    const std::string& arg = extras[i];
    if (arg.rfind("--", 0) != 0 || arg.size() < 3) throw slm::FormatError("unexpected argument '" + arg + "'");
    const std::string body = arg.substr(2);
    const auto eq = body.find('=');
    if (eq != std::string::npos) {
      kv[body.substr(0, eq)] = body.substr(eq + 1);
    } else if (i + 1 < extras.size()) {
      kv[body] = extras[++i];
    } else {
      throw slm::FormatError("missing value for --" + body);
    }
  }
  return kv;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Variational inference and experimental design for sparse linear models"};
  app.require_subcommand(1, 1);

  std::string config_path;
  std::string seed;
  std::string out;
  std::string bounding;
  std::string variance;
  std::string design;

  std::vector<CLI::App*> subs;
  for (const char* name : {"reconstruct", "infer", "design", "synth"}) {
    CLI::App* sub = app.add_subcommand(name);
    sub->allow_extras();
    sub->add_option("--config", config_path, "key=value configuration file");
    sub->add_option("--seed", seed, "random seed");
    sub->add_option("--out", out, "output directory");
    sub->add_option("--bounding", bounding, "A or B");
    sub->add_option("--variance", variance, "exact or lanczos:K");
    sub->add_option("--design", design, "op, ct, eq, rd or all");
    subs.push_back(sub);
  }
  CLI11_PARSE(app, argc, argv);

  try {
    CLI::App* sub = app.get_subcommands().front();
    slm::app::KeyValues kv;
    if (!config_path.empty()) kv = slm::app::load_key_values(config_path);
    for (const auto& [k, v] : extras_to_overrides(sub->remaining())) kv[k] = v;
    if (!seed.empty()) kv["seed"] = seed;
    if (!out.empty()) kv["out"] = out;
    if (!bounding.empty()) kv["bounding"] = bounding;
    if (!variance.empty()) kv["variance"] = variance;
    if (!design.empty()) kv["design"] = design;
    const slm::app::ExperimentConfig cfg = slm::app::apply_key_values({}, kv);

    const std::string cmd = sub->get_name();
    if (cmd == "reconstruct") {
      const auto r = slm::app::cmd_reconstruct(cfg);
      std::printf("columns %ld error %.6g zero_filled_error %.6g\n", static_cast<long>(r.columns), r.error,
                  r.zero_filled_error);
    } else if (cmd == "infer") {
      const auto rows = slm::app::cmd_infer(cfg);
      if (!rows.empty()) std::printf("outer loops %zu final phi %.10g\n", rows.size(), rows.back().phi);
    } else if (cmd == "design") {
      const auto rep = slm::app::cmd_design(cfg);
      for (const auto& [name, list] : rep.runs) {
        if (name == "rd") {
          std::printf("rd mean final error %.6g over %zu seeds\n", rep.rd_mean_final_error(), list.size());
        } else {
          std::printf("%s final error %.6g\n", name.c_str(), list.front().rounds.back().error);
        }
      }
    } else {
      std::printf("%s\n", slm::app::cmd_synth(cfg).c_str());
    }
  } catch (const slm::Error& e) {
    std::cerr << "slm: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
