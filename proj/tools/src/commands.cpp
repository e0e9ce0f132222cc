#include "slm/app/commands.hpp"

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "slm/app/pgm.hpp"
#include "slm/app/synth.hpp"
#include "slm/errors.hpp"

namespace slm::app {

namespace {

constexpr const char* kSchema = "# schema=1\n";

std::string num(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::filesystem::path out_dir(const ExperimentConfig& c) {
  std::filesystem::path dir(c.out);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory", dir.string());
  return dir;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write file", path.string());
  out << text;
  if (!out) throw IoError("write failed", path.string());
}

void write_image(const std::filesystem::path& path, Index side, const Vector& u) {
  write_pgm(path.string(), GrayImage{side, side, u});
}

Index or_default(Index v, Index fallback) { return v >= 0 ? v : fallback; }

ImagePrior prior_for(const ExperimentConfig& c, Index side) {
  return make_image_prior(side, prior_params(c));
}

double median(Vector v) {
  if (v.size() == 0) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.data(), v.data() + v.size());
  const Index h = v.size() / 2;
  return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

}  // namespace

Vector load_ground_truth(const ExperimentConfig& c) {
  if (c.image.empty()) return make_synthetic(c.generator, c.side, c.seed);
  const GrayImage img = read_pgm(c.image);
  if (img.width != img.height) throw FormatError("image must be square: " + c.image);
  if (img.width != c.side) throw FormatError("image side does not match config side: " + c.image);
  return img.pixels;
}

double noise_variance(const ExperimentConfig& c, const Vector& u) {
  if (c.sigma2 > 0.0) return c.sigma2;
  const double power = u.size() ? u.squaredNorm() / static_cast<double>(u.size()) : 0.0;
  if (!(power > 0.0)) throw DomainError("noise variance: signal power is zero, set sigma2");
  return c.noise_ratio * power;
}

ImagePriorParams prior_params(const ExperimentConfig& c) {
  ImagePriorParams p;
  p.tau_a = c.tau_a;
  p.tau_r = c.tau_r;
  p.kind = c.potential;
  p.nu = c.nu;
  p.isotropic_tv = c.isotropic_tv;
  p.haar_levels = c.haar_levels;
  return p;
}

ReconstructReport cmd_reconstruct(const ExperimentConfig& c) {
  validate(c);
  const Vector u = load_ground_truth(c);
  const double sigma2 = noise_variance(c, u);
  const Index side = c.side;
  ReconstructReport rep;
  rep.columns = std::min(or_default(c.columns, side / 2), side);
  const std::vector<Index> cols = baseline_design(BaselineKind::Lowpass, side, rep.columns, {}, c.seed);
  const ImagePrior prior = prior_for(c, side);
  const ModelSpec model = make_model(prior, make_partial_orthotransform_2d(side, side, cols),
                                     simulate_measurements(u, side, cols, sigma2, c.seed), sigma2);
  const Vector zero_filled = model.X.apply_adjoint(model.y);
  if (c.posterior_mean) {
    DoubleLoopOptions dl;
    dl.bounding = c.bounding;
    dl.variance = c.variance;
    dl.outer_max = c.outer_max;
    rep.reconstruction = run_double_loop(model, dl).u_star;
  } else {
    rep.reconstruction = map_estimate(model, c.map_epsilon, zero_filled);
  }
  rep.error = (rep.reconstruction - u).norm();
  rep.zero_filled_error = (zero_filled - u).norm();

  const auto dir = out_dir(c);
  write_image(dir / "reconstruction.pgm", side, rep.reconstruction);
  std::ostringstream csv;
  csv << kSchema << "method,columns,error,zero_filled_error,norm_true\n"
      << (c.posterior_mean ? "posterior_mean" : "map") << "," << rep.columns << "," << num(rep.error) << ","
      << num(rep.zero_filled_error) << "," << num(u.norm()) << "\n";
  write_text(dir / "reconstruct.csv", csv.str());
  return rep;
}

std::vector<InferRow> cmd_infer(const ExperimentConfig& c) {
  validate(c);
  const Vector u = load_ground_truth(c);
  const double sigma2 = noise_variance(c, u);
  const Index side = c.side;
  const Index ncol = std::min(or_default(c.columns, side / 4), side);
  const std::vector<Index> cols = baseline_design(BaselineKind::Lowpass, side, ncol, {}, c.seed);
  const ImagePrior prior = prior_for(c, side);
  const ModelSpec model = make_model(prior, make_partial_orthotransform_2d(side, side, cols),
                                     simulate_measurements(u, side, cols, sigma2, c.seed), sigma2);

  std::vector<Bounding> kinds{c.bounding};
  if (c.compare_bounding) kinds = {Bounding::TypeA, Bounding::TypeB};
  std::vector<InferRow> rows;
  for (Bounding b : kinds) {
    DoubleLoopOptions dl;
    dl.bounding = b;
    dl.variance = c.variance;
    dl.outer_max = c.outer_max;
    std::vector<InferRow> local;
    dl.on_outer = [&](int outer, const Vector& gamma, double phi) {
      InferRow r;
      r.bounding = b;
      r.outer = outer;
      r.phi = phi;
      r.gamma_min = gamma.minCoeff();
      r.gamma_median = median(gamma);
      r.gamma_max = gamma.maxCoeff();
      local.push_back(r);
    };
    const VariationalState st = run_double_loop(model, dl);
    for (InferRow& r : local) {
      if (r.outer >= 1 && r.outer <= static_cast<int>(st.inner_steps.size())) {
        r.inner_steps = st.inner_steps[static_cast<std::size_t>(r.outer - 1)];
      }
      rows.push_back(r);
    }
  }

  std::ostringstream csv;
  csv << kSchema << "bounding,outer,phi,inner_steps,gamma_min,gamma_median,gamma_max\n";
  for (const InferRow& r : rows) {
    csv << to_string(r.bounding) << "," << r.outer << "," << num(r.phi) << "," << r.inner_steps << ","
        << num(r.gamma_min) << "," << num(r.gamma_median) << "," << num(r.gamma_max) << "\n";
  }
  write_text(out_dir(c) / "infer.csv", csv.str());
  return rows;
}

std::string design_csv(const DesignTrajectory& t) {
  std::ostringstream csv;
  csv << kSchema << "round,selected,score,phi,error,wall_time\n";
  for (const DesignRound& r : t.rounds) {
    csv << r.round << "," << r.selected << "," << num(r.score) << "," << num(r.phi) << "," << num(r.error)
        << "," << num(r.wall_time) << "\n";
  }
  return csv.str();
}

double DesignReport::rd_mean_final_error() const {
  const auto it = runs.find("rd");
  if (it == runs.end() || it->second.empty()) return std::numeric_limits<double>::quiet_NaN();
  double sum = 0.0;
  for (const DesignTrajectory& t : it->second) sum += t.rounds.back().error;
  return sum / static_cast<double>(it->second.size());
}

DesignReport cmd_design(const ExperimentConfig& c) {
  validate(c);
  const Vector u = load_ground_truth(c);
  const double sigma2 = noise_variance(c, u);
  const Index side = c.side;
  const Index n_init = or_default(c.init_columns, std::max<Index>(1, side / 8));
  const Index n_total = or_default(c.total_columns, side / 4);
  if (n_init > n_total || n_total > side) throw DomainError("design: need init_columns <= total_columns <= side");
  const int rounds = static_cast<int>(n_total - n_init);
  const std::vector<Index> init = baseline_design(BaselineKind::Lowpass, side, n_init, {}, c.seed);
  std::vector<Index> pool;
  for (Index col = 0; col < side; ++col) {
    if (std::find(init.begin(), init.end(), col) == init.end()) pool.push_back(col);
  }
  const ImagePrior prior = prior_for(c, side);
  DesignOptions opt;
  opt.bounding = c.bounding;
  opt.variance = c.variance;
  opt.outer_max = c.outer_max;
  opt.map_epsilon = c.map_epsilon;
  opt.seed = c.seed;
  opt.timing = c.timing;

  const bool all = c.design == "all";
  DesignReport rep;
  if (all || c.design == "op") {
    rep.runs["op"].push_back(run_sequential_design(prior, u, sigma2, pool, init, rounds, opt));
  }
  const std::pair<const char*, BaselineKind> fixed[] = {{"ct", BaselineKind::Lowpass},
                                                         {"eq", BaselineKind::Equispaced}};
  for (const auto& [name, kind] : fixed) {
    if (!all && c.design != name) continue;
    const std::vector<Index> seq = baseline_design(kind, side, rounds, init, c.seed);
    rep.runs[name].push_back(run_fixed_design(prior, u, sigma2, init, seq, opt));
  }
  if (all || c.design == "rd") {
    for (int k = 0; k < c.rd_repeats; ++k) {
      const std::uint64_t s = c.seed * 1000003ULL + static_cast<std::uint64_t>(k) + 1;
      const std::vector<Index> seq = baseline_design(BaselineKind::RandomVd, side, rounds, init, s);
      rep.runs["rd"].push_back(run_fixed_design(prior, u, sigma2, init, seq, opt));
    }
  }

  const auto dir = out_dir(c);
  std::ostringstream summary;
  summary << kSchema << "design,repeat,final_error,columns\n";
  for (const auto& [name, list] : rep.runs) {
    for (std::size_t k = 0; k < list.size(); ++k) {
      const std::string stem = name == "rd" ? "design_rd_" + std::to_string(k) : "design_" + name;
      write_text(dir / (stem + ".csv"), design_csv(list[k]));
      write_image(dir / (stem + ".pgm"), side, list[k].reconstruction);
      summary << name << "," << k << "," << num(list[k].rounds.back().error) << ",";
      for (std::size_t j = 0; j < list[k].design.size(); ++j) summary << (j ? " " : "") << list[k].design[j];
      summary << "\n";
    }
  }
  write_text(dir / "design_summary.csv", summary.str());
  return rep;
}

std::string cmd_synth(const ExperimentConfig& c) {
  validate(c);
  const Vector u = make_synthetic(c.generator, c.side, c.seed);
  std::string name = c.generator;
  std::replace(name.begin(), name.end(), '+', '_');
  const auto path = out_dir(c) / (name + ".pgm");
  write_image(path, c.side, u);
  return path.string();
}

}  // namespace slm::app
