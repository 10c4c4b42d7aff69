// Copyright 2026 The pamkit Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Command-line driver: synthetic data, training, allocation, codec and
// evaluation runs. Every run writes its resolved configuration and hash into
// the output directory.

#include <cstdio>
#include <cstdlib>
#include <memory>
#include <optional>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "pam/bitalloc.hpp"
#include "pam/codec.hpp"
#include "pam/eval.hpp"
#include "pam/io.hpp"
#include "pam/nn/checkpoint.hpp"
#include "pam/rng.hpp"
#include "pam/synth.hpp"

namespace fs = std::filesystem;
using namespace pam;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

// Raised for unusable configurations: bad values, or outputs that exist
// without --force.
class ConfigError : public Error {
 public:
  using Error::Error;
};

struct Global {
  std::string config;
  std::uint64_t seed = 0;
  std::string out = ".";
  bool force = false;
  int threads = 1;
};

struct SynthOpts {
  int clips = 2000;
  double train_fraction = 0.5;
  double snr_lo = -5.0;
  double snr_hi = 20.0;
  double level_lo = 0.3;
  double level_hi = 3.0;
  int export_spectrograms = 4;
};

struct TrainOpts {
  std::string data;
  int epochs = 20;
  double lr = 0.1;
  double momentum = 0.9;
  int batch = 64;
  double weight_decay = 1e-4;
  int patience = 3;
  double grad_clip = 1.0;
  double validation_fraction = 0.1;
};

struct PlanOpts {
  std::string method;  // empty means uncompressed
  int budget = 329;
  std::string lambda;
  int floor = codec::kMinBits;
};

struct AllocOpts {
  double mu = 1e-7;
  double lambda_init = 2.0;
  double lambda_floor = -6.0;
  std::vector<int> budgets{235, 329, 423};
  std::string warm_start;  // detector checkpoint; empty trains from scratch
};

struct EvalOpts {
  std::vector<int> budgets{235, 329, 423};
  int floor = codec::kMinBits;
  std::vector<std::string> methods{"learned", "human", "uniform"};
  int seeds = 5;
};

struct CodecOpts {
  std::string input;
  double scale = 0.0;  // 0 means derive from the input
};

std::string upper(std::string s) {
  for (auto& c : s) c = static_cast<char>(c == '-' ? '_' : std::toupper(static_cast<unsigned char>(c)));
  return s;
}

// Adds `--name` with a PAM_<NAME> environment override.
template <typename T>
CLI::Option* opt(CLI::App& app, const std::string& name, T& value, const std::string& help) {
  return app.add_option("--" + name, value, help)->envname("PAM_" + upper(name))->capture_default_str();
}

// Drops config-file entries whose PAM_<NAME> variable is set, so the
// environment overrides the file. CLI11 alone would let the file win.
class EnvFirstConfig : public CLI::ConfigTOML {
 public:
  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    std::vector<CLI::ConfigItem> items = CLI::ConfigTOML::from_config(input);
    std::erase_if(items, [](const CLI::ConfigItem& item) {
      return std::getenv(("PAM_" + upper(item.name)).c_str()) != nullptr;
    });
    return items;
  }
};

std::vector<codec::AllocationMethod> parse_methods(const std::vector<std::string>& names) {
  std::vector<codec::AllocationMethod> out;
  for (const auto& name : names) out.push_back(codec::allocation_method_from_string(name));
  return out;
}

std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

// Output directory bookkeeping: refuses to overwrite without --force and
// stamps text artifacts with the config hash.
class Outputs {
 public:
  Outputs(const Global& g, const std::string& command, std::string resolved_config)
      : dir_(g.out), force_(g.force), command_(command), config_(std::move(resolved_config)) {
    hash_ = hex64(fnv1a64(config_));
  }

  const std::string& hash() const { return hash_; }

  // Declares every file the command will write before any work starts.
  void claim(const std::vector<std::string>& names) {
    for (const auto& n : names) {
      if (!force_ && fs::exists(dir_ / n)) {
        throw ConfigError("output " + (dir_ / n).string() + " exists; pass --force to overwrite");
      }
    }
    fs::create_directories(dir_);
    std::ofstream cfg(dir_ / (command_ + ".config.ini"), std::ios::trunc);
    cfg << "# config_hash=" << hash_ << '\n' << config_;
    if (!cfg) throw Error("cannot write config record to " + dir_.string());
  }

  fs::path path(const std::string& name) const { return dir_ / name; }

  void write_text(const std::string& name, const std::string& body) const {
    std::ofstream out(dir_ / name, std::ios::trunc);
    out << "# config_hash=" << hash_ << '\n' << body;
    if (!out) throw Error("cannot write " + (dir_ / name).string());
  }

  void write_bytes(const std::string& name, std::span<const std::uint8_t> bytes) const {
    io::write_file(dir_ / name, bytes);
  }

 private:
  fs::path dir_;
  bool force_;
  std::string command_;
  std::string config_;
  std::string hash_;
};

synth::DatasetSplit load_dataset(const std::string& dir) {
  if (dir.empty()) throw ConfigError("--data is required");
  synth::DatasetSplit ds;
  auto load = [&](const char* name, std::vector<synth::LabeledClip>& clips) {
    const io::ClipFile f = io::parse_clips(io::read_file(fs::path(dir) / name));
    ds.sample_rate = f.sample_rate;
    ds.geometry.frames = f.frames;
    clips = f.clips;
  };
  load("train.pamds", ds.train);
  load("test.pamds", ds.test);
  return ds;
}

nn::TrainConfig train_config(const TrainOpts& t, std::uint64_t seed) {
  nn::TrainConfig cfg;
  cfg.epochs = t.epochs;
  cfg.learning_rate = t.lr;
  cfg.momentum = t.momentum;
  cfg.batch_size = t.batch;
  cfg.weight_decay = t.weight_decay;
  cfg.plateau_patience = t.patience;
  cfg.grad_clip_norm = t.grad_clip;
  cfg.validation_fraction = t.validation_fraction;
  cfg.seed = seed;
  try {
    cfg.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
  return cfg;
}

std::optional<codec::AllocationPlan> plan_from(const PlanOpts& p, const eval::PreparedData& data) {
  if (p.method.empty() || p.method == "none") return std::nullopt;
  const auto method = codec::allocation_method_from_string(p.method);
  std::optional<Eigen::VectorXd> lambda;
  if (method == codec::AllocationMethod::kLearned) {
    if (p.lambda.empty()) throw ConfigError("--lambda is required for the learned method");
    const auto bytes = io::read_file(p.lambda);
    lambda = bitalloc::parse_lambda_csv(std::string(bytes.begin(), bytes.end()));
  }
  return eval::make_plan(method, p.budget, data, lambda, p.floor);
}

codec::AllocationPlan plan_for_bands(const PlanOpts& p, int bands) {
  const auto method = codec::allocation_method_from_string(p.method.empty() ? "uniform" : p.method);
  switch (method) {
    case codec::AllocationMethod::kLearned: {
      if (p.lambda.empty()) throw ConfigError("--lambda is required for the learned method");
      const auto bytes = io::read_file(p.lambda);
      const Eigen::VectorXd lambda = bitalloc::parse_lambda_csv(std::string(bytes.begin(), bytes.end()));
      return bitalloc::lambda_to_allocation(lambda, p.budget, p.floor);
    }
    case codec::AllocationMethod::kHuman: {
      const auto bins = dsp::StftConfig{}.selected_bins();
      if (static_cast<int>(bins.size()) != bands) throw ConfigError("human plan needs the default band layout");
      std::vector<double> freqs;
      for (int k : bins) freqs.push_back(k * dsp::StftConfig{}.bin_hz());
      return codec::human_allocation(freqs, p.budget, p.floor);
    }
    case codec::AllocationMethod::kUniform:
      return codec::uniform_allocation(bands, p.budget, p.floor);
  }
  throw ConfigError("unknown method");
}

std::string history_csv(const std::vector<nn::EpochStats>& history) {
  std::ostringstream os;
  os << "epoch,learning_rate,train_loss,penalty,train_accuracy,val_loss,val_accuracy\n" << std::setprecision(10);
  for (const auto& h : history) {
    os << h.epoch << ',' << h.learning_rate << ',' << h.train_loss << ',' << h.penalty << ',' << h.train_accuracy
       << ',' << h.val_loss << ',' << h.val_accuracy << '\n';
  }
  return os.str();
}

// -- Commands ----------------------------------------------------------------

void run_synth(const Global& g, const SynthOpts& o, Outputs& out) {
  synth::DatasetConfig cfg;
  cfg.n_clips = o.clips;
  cfg.train_fraction = o.train_fraction;
  cfg.snr_lo_db = o.snr_lo;
  cfg.snr_hi_db = o.snr_hi;
  cfg.level_lo = o.level_lo;
  cfg.level_hi = o.level_hi;
  std::vector<std::string> files{"train.pamds", "test.pamds", "labels_train.csv", "labels_test.csv"};
  for (int i = 0; i < o.export_spectrograms; ++i) {
    std::ostringstream name;
    name << "test_" << std::setw(4) << std::setfill('0') << i << ".spec";
    files.push_back(name.str());
  }
  out.claim(files);
  const synth::DatasetSplit ds = synth::build_dataset(cfg, derive_seed(g.seed, "dataset"));
  out.write_bytes("train.pamds", io::serialize_clips(ds.train, ds.sample_rate, ds.geometry));
  out.write_bytes("test.pamds", io::serialize_clips(ds.test, ds.sample_rate, ds.geometry));
  out.write_text("labels_train.csv", io::labels_csv(ds.train));
  out.write_text("labels_test.csv", io::labels_csv(ds.test));
  for (int i = 0; i < o.export_spectrograms && i < static_cast<int>(ds.test.size()); ++i) {
    out.write_bytes(files[4 + static_cast<std::size_t>(i)],
                    io::serialize_spectrogram(dsp::stft(ds.test[static_cast<std::size_t>(i)].waveform)));
  }
  std::cout << "synth: " << ds.train.size() << " train + " << ds.test.size() << " test clips, config "
            << out.hash() << '\n';
}

void run_train(const Global& g, const TrainOpts& t, const PlanOpts& p, Outputs& out) {
  const nn::TrainConfig cfg = train_config(t, derive_seed(g.seed, "detector"));
  out.claim({"detector.pamm", "history.csv"});
  const eval::PreparedData data = eval::prepare(load_dataset(t.data));
  const auto plan = plan_from(p, data);
  const nn::TrainResult r = eval::train_detector(data, plan, cfg);
  const eval::Metrics m = eval::evaluate_detector(r.model, data, plan);
  nn::save_model(r.model, out.path("detector.pamm"));
  out.write_text("history.csv", history_csv(r.history));
  std::cout << "train: test accuracy " << m.accuracy << " precision " << m.precision << " recall " << m.recall
            << '\n';
}

void run_segment(const Global& g, const TrainOpts& t, bool ablation, Outputs& out) {
  const nn::TrainConfig cfg = train_config(t, derive_seed(g.seed, "segmenter"));
  std::vector<std::string> files{"segmenter.pamm", "segmenter_history.csv", "segments.csv"};
  if (ablation) files.push_back("segmenter_nofreq.pamm");
  out.claim(files);
  const eval::PreparedData data = eval::prepare(load_dataset(t.data));
  const nn::TrainResult seg = nn::train_segmenter(data.train, cfg);
  std::optional<nn::TrainResult> abl;
  if (ablation) {
    nn::SegmenterConfig arch;
    arch.frequency_conv = false;
    abl = nn::train_segmenter(data.train, cfg, arch);
    nn::save_model(abl->model, out.path("segmenter_nofreq.pamm"));
  }
  const eval::SegmentationMetrics m = eval::evaluate_segmenter(seg.model, data.test, abl ? &abl->model : nullptr);
  nn::save_model(seg.model, out.path("segmenter.pamm"));
  out.write_text("segmenter_history.csv", history_csv(seg.history));
  std::ostringstream os;
  os << "clip_id,frame,p_call,label\n" << std::setprecision(6);
  for (std::size_t i = 0; i < data.test.size(); ++i) {
    const RowMatrixXd probs = nn::segment(seg.model, data.test.inputs[i]);
    for (Eigen::Index f = 0; f < probs.rows(); ++f) {
      os << i << ',' << f << ',' << probs(f, nn::kCall) << ',' << (data.test.frame_labels[i][static_cast<std::size_t>(f)] ? 1 : 0)
         << '\n';
    }
  }
  out.write_text("segments.csv", os.str());
  std::cout << "segment: per-frame accuracy " << m.accuracy;
  if (m.ablation_accuracy) std::cout << ", without frequency conv " << *m.ablation_accuracy;
  std::cout << '\n';
}

void run_alloc(const Global& g, const TrainOpts& t, const AllocOpts& a, Outputs& out) {
  bitalloc::AllocTrainConfig cfg;
  cfg.mu = a.mu;
  cfg.lambda_init = a.lambda_init;
  cfg.lambda_floor = a.lambda_floor;
  cfg.train = train_config(t, derive_seed(g.seed, "alloc"));
  try {
    cfg.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
  const std::vector<int>& budgets = a.budgets;
  out.claim({"lambda.csv", "alloc.pamm", "alloc_history.csv"});
  const eval::PreparedData data = eval::prepare(load_dataset(t.data));
  for (int b : budgets) {
    if (b < codec::kMinBits * static_cast<int>(data.band_freqs_hz.size())) {
      throw ConfigError("budget " + std::to_string(b) + " is below the 5-bit floor");
    }
  }
  std::optional<nn::ModelParams<float>> warm;
  if (!a.warm_start.empty()) {
    warm = nn::load_model(a.warm_start);
    if (warm->arch != "detector") throw ConfigError("--warm-start needs a detector checkpoint");
  }
  const bitalloc::AllocResult r = bitalloc::train_allocation(data.train, cfg, warm ? &*warm : nullptr);
  out.write_text("lambda.csv", bitalloc::lambda_csv(r.lambda, data.band_freqs_hz, budgets));
  nn::save_model(r.model, out.path("alloc.pamm"));
  std::ostringstream os;
  os << "epoch,learning_rate,classification_loss,penalty,mean_lambda,sum_lambda,val_loss,val_accuracy\n"
     << std::setprecision(10);
  for (const auto& h : r.history) {
    os << h.stats.epoch << ',' << h.stats.learning_rate << ',' << h.stats.train_loss << ',' << h.stats.penalty << ','
       << h.mean_lambda << ',' << h.sum_lambda << ',' << h.stats.val_loss << ',' << h.stats.val_accuracy << '\n';
  }
  out.write_text("alloc_history.csv", os.str());
  std::cout << "alloc: mean lambda " << r.lambda.mean() << " (min " << r.lambda.minCoeff() << ", max "
            << r.lambda.maxCoeff() << ")\n";
}

double input_scale(const CodecOpts& c, const Spectrogram& s) {
  if (c.scale > 0) return c.scale;
  if (c.scale < 0) throw ConfigError("--scale must be positive");
  return codec::percentile_scale(std::span<const Spectrogram>(&s, 1));
}

void run_compress(const CodecOpts& c, const PlanOpts& p, Outputs& out) {
  if (c.input.empty()) throw ConfigError("--input is required");
  const std::string name = fs::path(c.input).stem().string() + ".pamc";
  out.claim({name});
  const Spectrogram s = io::parse_spectrogram(io::read_file(c.input));
  const codec::AllocationPlan plan = plan_for_bands(p, static_cast<int>(s.bands()));
  const codec::EncodedBlock block = codec::encode(codec::float_to_fixed(s, input_scale(c, s)), plan);
  out.write_bytes(name, block.serialize());
  std::cout << "compress: " << block.payload_bits() << " payload bits, ratio "
            << codec::compression_ratio(plan) << '\n';
}

void run_decompress(const CodecOpts& c, Outputs& out) {
  if (c.input.empty()) throw ConfigError("--input is required");
  const std::string name = fs::path(c.input).stem().string() + ".spec";
  out.claim({name});
  const codec::EncodedBlock block = codec::parse(io::read_file(c.input));
  out.write_bytes(name, io::serialize_spectrogram(codec::decode(block)));
  std::cout << "decompress: " << block.frames << " x " << block.bands << " scale " << block.scale << '\n';
}

void run_eval(const Global& g, const TrainOpts& t, const AllocOpts& a, const EvalOpts& e, Outputs& out) {
  eval::RateAccuracyConfig cfg;
  cfg.budgets = e.budgets;
  cfg.methods = parse_methods(e.methods);
  cfg.n_seeds = e.seeds;
  cfg.floor = e.floor;
  cfg.seed = derive_seed(g.seed, "eval");
  cfg.train = train_config(t, 0);
  cfg.alloc.mu = a.mu;
  cfg.alloc.lambda_init = a.lambda_init;
  cfg.alloc.lambda_floor = a.lambda_floor;
  cfg.alloc.train = cfg.train;
  cfg.threads = g.threads;
  out.claim({"results.csv", "table.txt"});
  const eval::PreparedData data = eval::prepare(load_dataset(t.data));
  try {
    cfg.validate(static_cast<int>(data.band_freqs_hz.size()));
  } catch (const InvalidArgument& ex) {
    throw ConfigError(ex.what());
  }
  const eval::RateAccuracyResult r = eval::rate_accuracy_table(data, cfg);
  out.write_text("results.csv", eval::runs_csv(r));
  std::ostringstream table;
  table << eval::render_table(r);
  table << "compression ratios are 32 * hop / budget (header excluded); reference figure: 116\n";
  out.write_text("table.txt", table.str());
  std::cout << table.str();
}

void run_pr(const Global& g, const TrainOpts& t, const std::string& model_path, Outputs& out) {
  out.claim({"pr_cnn.csv", "pr_svm.csv"});
  const eval::PreparedData data = eval::prepare(load_dataset(t.data));
  nn::ModelParams<float> model;
  if (model_path.empty()) {
    model = eval::train_detector(data, std::nullopt, train_config(t, derive_seed(g.seed, "detector"))).model;
  } else {
    model = nn::load_model(model_path);
  }
  const eval::Metrics cnn = eval::evaluate_detector(model, data);
  const eval::Metrics svm = eval::evaluate_mfcc_svm(data);
  const auto cnn_curve = eval::pr_curve(cnn.scores, cnn.labels);
  const auto svm_curve = eval::pr_curve(svm.scores, svm.labels);
  out.write_text("pr_cnn.csv", eval::pr_csv(cnn_curve));
  out.write_text("pr_svm.csv", eval::pr_csv(svm_curve));
  std::cout << "pr: cnn accuracy " << cnn.accuracy << " auc " << eval::pr_auc(cnn_curve) << "; svm accuracy "
            << svm.accuracy << " auc " << eval::pr_auc(svm_curve) << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Passive acoustic monitoring toolkit: synthetic data, detection and learned compression"};
  app.require_subcommand(1);
  app.fallthrough();
  app.allow_config_extras(CLI::config_extras_mode::ignore_all);

  Global g;
  app.config_formatter(std::make_shared<EnvFirstConfig>());
  app.set_config("--config", "", "INI file with key=value settings; [section] per subcommand");
  app.add_option("--seed", g.seed, "master seed")->envname("PAM_SEED")->capture_default_str();
  app.add_option("--out", g.out, "output directory")->envname("PAM_OUT")->capture_default_str();
  app.add_flag("--force", g.force, "overwrite existing outputs")->envname("PAM_FORCE");
  app.add_option("--threads", g.threads, "worker threads for independent jobs")
      ->envname("PAM_THREADS")
      ->check(CLI::Range(1, 256))
      ->capture_default_str();

  SynthOpts so;
  TrainOpts to;
  PlanOpts po;
  AllocOpts ao;
  EvalOpts eo;
  CodecOpts co;
  std::string model_path;
  bool ablation = true;

  auto add_train = [&](CLI::App& sub) {
    opt(sub, "data", to.data, "directory holding train.pamds and test.pamds");
    opt(sub, "epochs", to.epochs, "training epochs");
    opt(sub, "lr", to.lr, "initial learning rate");
    opt(sub, "momentum", to.momentum, "SGD momentum");
    opt(sub, "batch", to.batch, "mini-batch size");
    opt(sub, "weight-decay", to.weight_decay, "L2 weight decay");
    opt(sub, "patience", to.patience, "plateau epochs before the learning rate drops");
    opt(sub, "grad-clip", to.grad_clip, "global gradient norm cap (0 disables)");
    opt(sub, "validation-fraction", to.validation_fraction, "training share held out for the schedule");
  };
  auto add_plan = [&](CLI::App& sub) {
    opt(sub, "method", po.method, "allocation: learned, human, uniform (empty for none)");
    opt(sub, "budget", po.budget, "total bits per frame");
    opt(sub, "lambda", po.lambda, "lambda CSV for the learned method");
    opt(sub, "floor", po.floor, "minimum bits per band");
  };
  auto add_alloc = [&](CLI::App& sub) {
    opt(sub, "mu", ao.mu, "rate penalty weight");
    opt(sub, "lambda-init", ao.lambda_init, "initial lambda");
    opt(sub, "lambda-floor", ao.lambda_floor, "lambda below which the noise scale saturates");
  };

  CLI::App* synth_cmd = app.add_subcommand("synth", "generate a synthetic dataset");
  opt(*synth_cmd, "clips", so.clips, "total clips (half with calls)");
  opt(*synth_cmd, "train-fraction", so.train_fraction, "share of clips in the training split");
  opt(*synth_cmd, "snr-lo", so.snr_lo, "lowest call SNR in dB");
  opt(*synth_cmd, "snr-hi", so.snr_hi, "highest call SNR in dB");
  opt(*synth_cmd, "level-lo", so.level_lo, "lowest background RMS");
  opt(*synth_cmd, "level-hi", so.level_hi, "highest background RMS");
  opt(*synth_cmd, "export-spectrograms", so.export_spectrograms, "test spectrograms written as .spec files");

  CLI::App* train_cmd = app.add_subcommand("train", "train the detector");
  add_train(*train_cmd);
  add_plan(*train_cmd);

  CLI::App* segment_cmd = app.add_subcommand("segment", "train and score the per-frame segmenter");
  add_train(*segment_cmd);
  opt(*segment_cmd, "ablation", ablation, "also train the variant without the frequency convolution");

  CLI::App* alloc_cmd = app.add_subcommand("alloc", "learn per-band bit rates jointly with a detector");
  add_train(*alloc_cmd);
  add_alloc(*alloc_cmd);
  opt(*alloc_cmd, "budgets", ao.budgets, "comma-separated budgets listed in the lambda CSV")->delimiter(',');
  opt(*alloc_cmd, "warm-start", ao.warm_start, "detector checkpoint to start the classifier from");

  CLI::App* compress_cmd = app.add_subcommand("compress", "encode a .spec spectrogram");
  opt(*compress_cmd, "input", co.input, ".spec file");
  opt(*compress_cmd, "scale", co.scale, "fixed-point full scale (0: 99.9th percentile of the input)");
  add_plan(*compress_cmd);

  CLI::App* decompress_cmd = app.add_subcommand("decompress", "decode a .pamc block to a .spec file");
  opt(*decompress_cmd, "input", co.input, ".pamc file");

  CLI::App* eval_cmd = app.add_subcommand("eval", "rate-accuracy sweep over allocation methods");
  add_train(*eval_cmd);
  add_alloc(*eval_cmd);
  opt(*eval_cmd, "budgets", eo.budgets, "comma-separated total bit budgets")->delimiter(',');
  opt(*eval_cmd, "methods", eo.methods, "comma-separated allocation methods")->delimiter(',');
  opt(*eval_cmd, "seeds", eo.seeds, "seeds per cell");
  opt(*eval_cmd, "floor", eo.floor, "minimum bits per band; 1 admits the 47/141/235 grid");

  CLI::App* pr_cmd = app.add_subcommand("pr", "precision-recall curves for the detector and the MFCC baseline");
  add_train(*pr_cmd);
  opt(*pr_cmd, "model", model_path, "detector checkpoint (trained when omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    CLI::App* sub = app.get_subcommands().front();
    Outputs out(g, sub->get_name(), app.config_to_str(true, false));
    if (sub == synth_cmd) run_synth(g, so, out);
    else if (sub == train_cmd) run_train(g, to, po, out);
    else if (sub == segment_cmd) run_segment(g, to, ablation, out);
    else if (sub == alloc_cmd) run_alloc(g, to, ao, out);
    else if (sub == compress_cmd) run_compress(co, po, out);
    else if (sub == decompress_cmd) run_decompress(co, out);
    else if (sub == eval_cmd) run_eval(g, to, ao, eo, out);
    else if (sub == pr_cmd) run_pr(g, to, model_path, out);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const InvalidArgument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return 0;
}
