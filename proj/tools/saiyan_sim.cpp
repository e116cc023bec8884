// Command-line front end: simulate, sweep, range, ablation, mac, rlc.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "saiyan/saiyan.hpp"

namespace fs = std::filesystem;
using namespace saiyan;

namespace {

struct Common {
  std::string config;
  std::optional<int> sf;
  std::optional<double> bw;
  std::optional<int> cr;
  std::optional<std::string> mode;
  std::optional<std::uint64_t> seed;
  std::string out = ".";
  bool full = false;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--config", c.config, "JSON experiment config");
  sub->add_option("--sf", c.sf, "spreading factor");
  sub->add_option("--bw", c.bw, "bandwidth in Hz");
  sub->add_option("--cr", c.cr, "bits per chirp K");
  sub->add_option("--mode", c.mode, "vanilla | shifted | correlated");
  sub->add_option("--seed", c.seed, "base RNG seed");
  sub->add_option("--out", c.out, "output directory");
  sub->add_flag("--full", c.full, "1000 frames x 100 repeats per point");
}

ExperimentConfig resolve(const Common& c) {
  ExperimentConfig cfg = c.config.empty() ? ExperimentConfig::defaults() : load_config(c.config);
  if (c.sf) cfg.symbol.sf = *c.sf;
  if (c.cr) cfg.symbol.k_bits = *c.cr;
  if (c.bw) cfg.retune_bandwidth(*c.bw);
  if (c.mode) cfg.mode = parse_mode(*c.mode);
  if (c.seed) cfg.seed = *c.seed;
  if (c.full) {
    cfg.n_frames = 1000;
    cfg.repeats = 100;
  }
  cfg.validate();
  return cfg;
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + p.string());
  f << text;
}

void write_manifest(const fs::path& dir, const std::string& sub, const ExperimentConfig& cfg,
                    const std::vector<std::string>& outputs) {
  nlohmann::json m = {{"subcommand", sub},
                      {"config_hash", config_hash(cfg)},
                      {"seed", cfg.seed},
                      {"outputs", outputs},
                      {"config", to_json(cfg)}};
  write_file(dir / "manifest.json", m.dump(2) + "\n");
}

fs::path out_dir(const Common& c) {
  fs::path d(c.out);
  fs::create_directories(d);
  return d;
}

std::vector<double> parse_values(const std::string& s) {
  std::vector<double> v;
  std::size_t pos = 0;
  while (pos <= s.size()) {
    const auto comma = s.find(',', pos);
    const auto tok = s.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
    if (tok.empty()) throw ConfigError("empty entry in --values");
    std::size_t used = 0;
    double x = 0;
    try {
      x = std::stod(tok, &used);
    } catch (const std::exception&) {
      throw ConfigError("bad number in --values: " + tok);
    }
    if (used != tok.size()) throw ConfigError("bad number in --values: " + tok);
    v.push_back(x);
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return v;
}

int run_mac(const Common& c) {
  const auto cfg = resolve(c);
  const auto dir = out_dir(c);
  const auto& s = cfg.mac;

  std::ostringstream retx;
  retx << "max_retx,p_uplink,prr,model_prr\n";
  for (int r = 0; r <= std::max(3, s.max_retx); ++r) {
    mac::LinkModel link{s.p_uplink};
    const double prr = mac::feedback_retransmit(link, r, s.n_packets, cfg.seed);
    retx << r << ',' << csv::ratio(s.p_uplink) << ',' << csv::ratio(prr) << ','
         << csv::ratio(1.0 - std::pow(1.0 - s.p_uplink, r + 1)) << '\n';
  }
  write_file(dir / "mac_retransmit.csv", retx.str());

  std::ostringstream aloha;
  aloha << "n_tags,n_slots,per_tag_success,model_success,all_success\n";
  const int slots = s.n_slots > 0 ? s.n_slots : s.n_tags;
  const auto st = mac::aloha_stats(s.n_tags, slots, s.aloha_rounds, cfg.seed);
  aloha << s.n_tags << ',' << slots << ',' << csv::ratio(st.per_tag_success) << ','
        << csv::ratio(std::pow(1.0 - 1.0 / slots, s.n_tags - 1)) << ',' << csv::ratio(st.all_success)
        << '\n';
  write_file(dir / "mac_aloha.csv", aloha.str());

  mac::LinkModel jammed{s.p_jammed};
  mac::LinkModel clean{s.p_clean};
  if (s.downlink == "pipeline") {
    auto sim = std::make_shared<const Simulator>(cfg);
    jammed.downlink = pipeline_downlink(sim, cfg.mode, s.downlink_distance_m);
  } else {
    jammed.downlink = mac::abstract_downlink(s.p_downlink);
  }
  const mac::DownlinkCommand hop{mac::Hop{s.hop_channel}, mac::Broadcast{}};
  const auto hr = mac::channel_hop_sim(jammed, clean, hop, s.n_packets, cfg.seed, s.window);
  std::ostringstream cdf;
  cdf << "phase,rank,prr\n";
  for (std::size_t i = 0; i < hr.windows_before.size(); ++i)
    cdf << "before," << i << ',' << csv::ratio(hr.windows_before[i]) << '\n';
  for (std::size_t i = 0; i < hr.windows_after.size(); ++i)
    cdf << "after," << i << ',' << csv::ratio(hr.windows_after[i]) << '\n';
  write_file(dir / "mac_hop.csv", cdf.str());

  std::printf("hop delivered: %s  median PRR before %.3f after %.3f\n", hr.hop_delivered ? "yes" : "no",
              hr.median_before, hr.median_after);
  write_manifest(dir, "mac", cfg, {"mac_retransmit.csv", "mac_aloha.csv", "mac_hop.csv"});
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Link-level simulator for the SAW/envelope LoRa demodulator"};
  app.require_subcommand(1);

  Common c;
  auto* simulate = app.add_subcommand("simulate", "BER/throughput/PRR at the configured distances");
  add_common(simulate, c);

  std::string axis = "cr";
  std::string values;
  auto* sweep_cmd = app.add_subcommand("sweep", "sweep one axis over the configured distances");
  add_common(sweep_cmd, c);
  sweep_cmd->add_option("--axis", axis, "sf | bw | cr | distance")->check(CLI::IsMember({"sf", "bw", "cr", "distance"}));
  sweep_cmd->add_option("--values", values, "comma-separated values")->required();

  auto* range_cmd = app.add_subcommand("range", "demodulation range (BER < 1%)");
  add_common(range_cmd, c);

  std::string ablation_values = "1,3,5";
  auto* ablation_cmd = app.add_subcommand("ablation", "range of each demodulator stage per CR");
  add_common(ablation_cmd, c);
  ablation_cmd->add_option("--values", ablation_values, "comma-separated CR values");

  auto* mac_cmd = app.add_subcommand("mac", "retransmission, ALOHA and channel hopping");
  add_common(mac_cmd, c);

  double f0 = 433e6, rlc_bw = 500e3, r_ohm = 50.0;
  auto* rlc_cmd = app.add_subcommand("rlc", "RLC band-pass capacitance for a given bandwidth");
  rlc_cmd->add_option("--f0", f0, "centre frequency in Hz");
  rlc_cmd->add_option("--bw", rlc_bw, "bandwidth in Hz");
  rlc_cmd->add_option("--r", r_ohm, "resistance in ohm");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*rlc_cmd) {
      const auto r = rlc_capacitance(f0, rlc_bw, r_ohm);
      std::printf("Q = %.6e\nC = %.6e F\nC (dw/(w0^2 R)) = %.6e F\nprinted figure for comparison: %s\n", r.q,
                  r.c_farad, r.c_alt_farad, kPrintedRlcFigure);
      return 0;
    }
    if (*mac_cmd) return run_mac(c);

    const auto cfg = resolve(c);
    const auto dir = out_dir(c);
    if (*simulate) {
      const auto pts = run_experiment(cfg);
      write_file(dir / "simulate.csv", points_csv(cfg.mode, cfg.symbol, pts));
      write_manifest(dir, "simulate", cfg, {"simulate.csv"});
    } else if (*sweep_cmd) {
      const auto rows = sweep(cfg, axis, parse_values(values));
      const auto name = "sweep_" + axis + ".csv";
      write_file(dir / name, sweep_csv(axis, rows));
      write_manifest(dir, "sweep", cfg, {name});
    } else if (*range_cmd) {
      const auto r = demod_range(cfg, cfg.mode);
      if (!r.diagnostic.empty()) std::fprintf(stderr, "range: %s\n", r.diagnostic.c_str());
      const auto name = "range_" + std::string(to_string(cfg.mode)) + ".csv";
      write_file(dir / name, range_csv(cfg.mode, cfg.symbol, r));
      write_manifest(dir, "range", cfg, {name});
    } else if (*ablation_cmd) {
      std::vector<AblationRow> rows;
      for (double k : parse_values(ablation_values)) {
        auto sub = cfg;
        sub.symbol.k_bits = static_cast<int>(k);
        sub.validate();
        rows.push_back(ablation(sub));
      }
      write_file(dir / "ablation.csv", ablation_csv(cfg.symbol, rows));
      write_manifest(dir, "ablation", cfg, {"ablation.csv"});
    }
    return 0;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const nlohmann::json::exception& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
