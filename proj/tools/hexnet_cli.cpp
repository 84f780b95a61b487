#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "hexnet.h"
#include "json.hpp"

namespace {

constexpr double kOracleTolerance = 1e-5;
constexpr double kLayerGradTolerance = 1e-5;
constexpr double kModelGradTolerance = 1e-4;

[[noreturn]] void die(hexnet_status status) {
  std::cerr << "error: " << hexnet_last_error() << " [" << hexnet_status_name(status)
            << "]" << std::endl;
  std::exit(1);
}

void require_ok(hexnet_status status) {
  if (status != HEXNET_OK) die(status);
}

void echo_line(const std::string& key, const std::string& value) {
  std::cout << "config " << key << "=" << value << "\n";
}

std::string bool_str(bool v) { return v ? "true" : "false"; }

struct MetricsWriter {
  std::ofstream file;

  void open(const std::string& path) {
    file.open(path, std::ios::app);
    if (!file) {
      std::cerr << "error: cannot open metrics file " << path << std::endl;
      std::exit(1);
    }
  }

  void write(const hexnet_metrics_record& r) {
    nlohmann::ordered_json j;
    j["epoch"] = r.epoch;
    if (r.has_train_loss)
      j["train_loss"] = r.train_loss;
    else
      j["train_loss"] = nullptr;
    j["val_loss"] = r.val_loss;
    j["top1_percent"] = r.top1_percent;
    j["top5_percent"] = r.top5_percent;
    j["wall_seconds"] = r.wall_seconds;
    const std::string line = j.dump();
    std::cout << line << "\n" << std::flush;
    if (file.is_open()) file << line << "\n" << std::flush;
  }

  static void callback(const hexnet_metrics_record* record, void* user_data) {
    static_cast<MetricsWriter*>(user_data)->write(*record);
  }
};

struct TrainArgs {
  std::string data_dir;
  int depth = 20;
  std::string shortcut = "hex_projection";
  std::uint64_t classes = 10;
  std::uint64_t seed = 0;
  std::uint64_t epochs = 182;
  std::uint64_t batch_size = 128;
  double lr = 0.1;
  double momentum = 0.9;
  double weight_decay = 1e-3;
  std::vector<std::uint64_t> lr_drops = {32000, 48000, 64000};
  bool no_decay_on_batchnorm = false;
  std::uint64_t limit_train = 0;
  std::string out_dir;
  std::string checkpoint;
  std::string resume;
  int threads = 1;
  std::string precision = "float32";
};

int run_train(const TrainArgs& a, bool epochs_given) {
  echo_line("subcommand", "train");
  echo_line("data", a.data_dir);
  echo_line("depth", std::to_string(a.depth));
  echo_line("shortcut", a.shortcut);
  echo_line("classes", std::to_string(a.classes));
  echo_line("seed", std::to_string(a.seed));
  echo_line("epochs", std::to_string(a.epochs));
  echo_line("batch_size", std::to_string(a.batch_size));
  echo_line("lr", std::to_string(a.lr));
  echo_line("momentum", std::to_string(a.momentum));
  echo_line("weight_decay", std::to_string(a.weight_decay));
  {
    std::string drops;
    for (std::size_t i = 0; i < a.lr_drops.size(); ++i) {
      if (i) drops += ",";
      drops += std::to_string(a.lr_drops[i]);
    }
    echo_line("lr_drops", drops);
  }
  echo_line("decay_on_batchnorm", bool_str(!a.no_decay_on_batchnorm));
  echo_line("limit_train", std::to_string(a.limit_train));
  echo_line("out", a.out_dir.empty() ? "(none)" : a.out_dir);
  echo_line("resume", a.resume.empty() ? "(none)" : a.resume);
  echo_line("threads", std::to_string(a.threads));
  echo_line("precision", a.precision);

  require_ok(hexnet_set_threads(a.threads));

  std::string checkpoint_path = a.checkpoint;
  if (!a.out_dir.empty()) {
    std::filesystem::create_directories(a.out_dir);
    if (checkpoint_path.empty())
      checkpoint_path = (std::filesystem::path(a.out_dir) / "checkpoint.bin").string();
  }
  echo_line("checkpoint", checkpoint_path.empty() ? "(none)" : checkpoint_path);

  MetricsWriter writer;
  if (!a.out_dir.empty())
    writer.open((std::filesystem::path(a.out_dir) / "metrics.jsonl").string());

  hexnet_dataset* dataset = nullptr;
  require_ok(hexnet_dataset_open(a.data_dir.c_str(), &dataset));

  if (!a.resume.empty()) {
    // The protocol fields are restored from the checkpoint; --epochs, when
    // given, overrides the run's total epoch target.
    hexnet_model* model = nullptr;
    const std::uint64_t total_epochs = epochs_given ? a.epochs : 0;
    const hexnet_status st = hexnet_train_resume(
        dataset, a.resume.c_str(), total_epochs,
        checkpoint_path.empty() ? nullptr : checkpoint_path.c_str(),
        MetricsWriter::callback, &writer, &model);
    if (st != HEXNET_OK) {
      hexnet_dataset_free(dataset);
      die(st);
    }
    hexnet_model_free(model);
    hexnet_dataset_free(dataset);
    std::cout << "resumed training complete" << std::endl;
    return 0;
  }

  hexnet_model* model = nullptr;
  require_ok(hexnet_model_create(a.depth, a.shortcut.c_str(), a.classes, &model));

  hexnet_train_options options;
  hexnet_train_options_defaults(&options);
  options.epochs = a.epochs;
  options.batch_size = a.batch_size;
  options.base_lr = a.lr;
  options.momentum = a.momentum;
  options.weight_decay = a.weight_decay;
  options.lr_drop_iterations = a.lr_drops.empty() ? nullptr : a.lr_drops.data();
  options.lr_drop_count = a.lr_drops.size();
  options.seed = a.seed;
  options.decay_on_batchnorm = a.no_decay_on_batchnorm ? 0 : 1;
  options.train_limit = a.limit_train;
  options.checkpoint_path = checkpoint_path.empty() ? nullptr : checkpoint_path.c_str();

  const hexnet_status st =
      hexnet_train(model, dataset, &options, MetricsWriter::callback, &writer);
  hexnet_model_free(model);
  hexnet_dataset_free(dataset);
  if (st != HEXNET_OK) die(st);
  std::cout << "training complete" << std::endl;
  return 0;
}

struct EvalArgs {
  std::string data_dir;
  std::string checkpoint;
  std::string split = "test";
  std::uint64_t split_seed = 0;
  std::uint64_t batch_size = 128;
  int threads = 1;
  std::string precision = "float32";
};

int run_eval(const EvalArgs& a, bool split_seed_given) {
  require_ok(hexnet_set_threads(a.threads));

  hexnet_model* model = nullptr;
  require_ok(hexnet_model_load(a.checkpoint.c_str(), &model));

  std::uint64_t split_seed = a.split_seed;
  if (!split_seed_given) {
    // The validation split is only meaningful against the seed that carved
    // it out during training, so default to the checkpoint's seed.
    require_ok(hexnet_checkpoint_info(a.checkpoint.c_str(), nullptr, nullptr, 0, nullptr,
                                      nullptr, nullptr, &split_seed));
  }

  echo_line("subcommand", "eval");
  echo_line("data", a.data_dir);
  echo_line("checkpoint", a.checkpoint);
  echo_line("split", a.split);
  echo_line("split_seed", std::to_string(split_seed));
  echo_line("batch_size", std::to_string(a.batch_size));
  echo_line("threads", std::to_string(a.threads));
  echo_line("precision", a.precision);

  hexnet_dataset* dataset = nullptr;
  hexnet_status st = hexnet_dataset_open(a.data_dir.c_str(), &dataset);
  if (st != HEXNET_OK) {
    hexnet_model_free(model);
    die(st);
  }

  double loss = 0.0, top1 = 0.0, top5 = 0.0;
  st = hexnet_evaluate(model, dataset, a.split.c_str(), split_seed, a.batch_size, &loss,
                       &top1, &top5);
  hexnet_dataset_free(dataset);
  hexnet_model_free(model);
  if (st != HEXNET_OK) die(st);

  std::printf("loss=%.6f top1=%.2f%% top5=%.2f%%\n", loss, top1, top5);
  return 0;
}

int run_verify_hexconv(std::size_t cases, std::uint64_t seed, int threads) {
  echo_line("subcommand", "verify-hexconv");
  echo_line("cases", std::to_string(cases));
  echo_line("seed", std::to_string(seed));
  echo_line("threads", std::to_string(threads));
  echo_line("tolerance", "1e-5");
  require_ok(hexnet_set_threads(threads));

  double max_deviation = 0.0;
  require_ok(hexnet_verify_hexconv(cases, seed, &max_deviation));
  std::printf("cases=%zu max_abs_deviation=%.3e\n", cases, max_deviation);
  if (max_deviation < kOracleTolerance) {
    std::cout << "verify-hexconv: pass" << std::endl;
    return 0;
  }
  std::cout << "verify-hexconv: FAIL (tolerance 1e-5)" << std::endl;
  return 1;
}

void print_gradcheck_line(const char* line, void*) { std::cout << line << "\n"; }

int run_gradcheck(std::uint64_t seed, int threads) {
  echo_line("subcommand", "gradcheck");
  echo_line("seed", std::to_string(seed));
  echo_line("threads", std::to_string(threads));
  echo_line("layer_tolerance", "1e-5");
  echo_line("model_tolerance", "1e-4");
  require_ok(hexnet_set_threads(threads));

  double worst_layer = 0.0, worst_model = 0.0;
  require_ok(hexnet_gradcheck(seed, print_gradcheck_line, nullptr, &worst_layer,
                              &worst_model));
  std::printf("worst_layer=%.3e worst_model=%.3e\n", worst_layer, worst_model);
  if (worst_layer < kLayerGradTolerance && worst_model < kModelGradTolerance) {
    std::cout << "gradcheck: pass" << std::endl;
    return 0;
  }
  std::cout << "gradcheck: FAIL (layer tolerance 1e-5, model tolerance 1e-4)" << std::endl;
  return 1;
}

int run_count_params(int depth, const std::string& shortcut, std::uint64_t classes) {
  echo_line("subcommand", "count-params");
  echo_line("depth", std::to_string(depth));
  echo_line("shortcut", shortcut);
  echo_line("classes", std::to_string(classes));

  hexnet_model* model = nullptr;
  require_ok(hexnet_model_create(depth, shortcut.c_str(), classes, &model));
  std::uint64_t count = 0;
  require_ok(hexnet_model_param_count(model, &count));
  hexnet_model_free(model);
  std::cout << count << std::endl;
  return 0;
}

int run_bench(std::size_t in_channels, std::size_t out_channels, std::size_t spatial,
              std::size_t repeats, std::uint64_t seed, int threads) {
  echo_line("subcommand", "bench");
  echo_line("in_channels", std::to_string(in_channels));
  echo_line("out_channels", std::to_string(out_channels));
  echo_line("spatial", std::to_string(spatial));
  echo_line("repeats", std::to_string(repeats));
  echo_line("seed", std::to_string(seed));
  echo_line("threads", std::to_string(threads));
  require_ok(hexnet_set_threads(threads));

  hexnet_bench_result r;
  require_ok(hexnet_bench_conv(in_channels, out_channels, spatial, repeats, seed, &r));
  std::printf("hex_median_ms=%.4f square_median_ms=%.4f ratio=%.3f\n", r.hex_median_ms,
              r.square_median_ms, r.ratio);
  if (repeats > 1) {
    std::printf("hex_min_ms=%.4f hex_max_ms=%.4f square_min_ms=%.4f square_max_ms=%.4f\n",
                r.hex_min_ms, r.hex_max_ms, r.square_min_ms, r.square_max_ms);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hexagonal-convolution residual network engine"};
  app.require_subcommand(1);

  const std::vector<std::string> shortcut_modes = {"identity_pad", "projection_1x1",
                                                   "hex_projection"};
  const std::vector<int> depths = {20, 32, 44, 56};

  TrainArgs train_args;
  CLI::App* train = app.add_subcommand("train", "Train a residual network on CIFAR-10");
  train->add_option("--data", train_args.data_dir, "Directory with CIFAR-10 batch files")
      ->required();
  train->add_option("--depth", train_args.depth, "Network depth")
      ->check(CLI::IsMember(depths))
      ->capture_default_str();
  train->add_option("--shortcut", train_args.shortcut, "Shortcut mode")
      ->check(CLI::IsMember(shortcut_modes))
      ->capture_default_str();
  train->add_option("--classes", train_args.classes, "Output classes")
      ->capture_default_str();
  train->add_option("--seed", train_args.seed, "Run seed")->capture_default_str();
  CLI::Option* epochs_opt =
      train->add_option("--epochs", train_args.epochs, "Total epochs")
          ->capture_default_str();
  train->add_option("--batch-size", train_args.batch_size, "Minibatch size")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  train->add_option("--lr", train_args.lr, "Base learning rate")->capture_default_str();
  train->add_option("--momentum", train_args.momentum, "Momentum coefficient")
      ->capture_default_str();
  train->add_option("--weight-decay", train_args.weight_decay, "Weight decay coefficient")
      ->capture_default_str();
  train->add_option("--lr-drops", train_args.lr_drops,
                    "Iterations at which the learning rate divides by 10")
      ->delimiter(',');
  train->add_flag("--no-decay-on-batchnorm", train_args.no_decay_on_batchnorm,
                  "Exempt batch-norm scale and shift from weight decay");
  train->add_option("--limit-train", train_args.limit_train,
                    "Train on the first N images of the split (0 = all)")
      ->capture_default_str();
  train->add_option("--out", train_args.out_dir,
                    "Directory for metrics.jsonl and the rolling checkpoint");
  train->add_option("--checkpoint", train_args.checkpoint,
                    "Rolling checkpoint path (overrides --out)");
  train->add_option("--resume", train_args.resume, "Continue from this checkpoint");
  train->add_option("--threads", train_args.threads, "Worker threads")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  train->add_option("--precision", train_args.precision, "Training arithmetic")
      ->check(CLI::IsMember({"float32"}))
      ->capture_default_str();

  EvalArgs eval_args;
  CLI::App* eval = app.add_subcommand("eval", "Evaluate a checkpoint on a data split");
  eval->add_option("--checkpoint", eval_args.checkpoint, "Checkpoint to evaluate")
      ->required();
  eval->add_option("--data", eval_args.data_dir, "Directory with CIFAR-10 batch files");
  eval->add_option("--split", eval_args.split, "Data split")
      ->check(CLI::IsMember({"validation", "train_split", "test"}))
      ->capture_default_str();
  CLI::Option* split_seed_opt =
      eval->add_option("--split-seed", eval_args.split_seed,
                       "Train/validation split seed (default: the checkpoint's seed)");
  eval->add_option("--batch-size", eval_args.batch_size, "Evaluation batch size")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  eval->add_option("--threads", eval_args.threads, "Worker threads")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  eval->add_option("--precision", eval_args.precision, "Evaluation arithmetic")
      ->check(CLI::IsMember({"float32"}))
      ->capture_default_str();

  std::size_t verify_cases = 200;
  std::uint64_t verify_seed = 0;
  int verify_threads = 1;
  CLI::App* verify = app.add_subcommand(
      "verify-hexconv", "Check the decomposed hexagonal convolution against its oracle");
  verify->add_option("--cases", verify_cases, "Random cases to sweep")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  verify->add_option("--seed", verify_seed, "Sweep seed")->capture_default_str();
  verify->add_option("--threads", verify_threads, "Worker threads")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  std::uint64_t gradcheck_seed = 0;
  int gradcheck_threads = 1;
  CLI::App* gradcheck =
      app.add_subcommand("gradcheck", "Central-difference checks of every gradient");
  gradcheck->add_option("--seed", gradcheck_seed, "Check seed")->capture_default_str();
  gradcheck->add_option("--threads", gradcheck_threads, "Worker threads")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  int count_depth = 20;
  std::string count_shortcut = "hex_projection";
  std::uint64_t count_classes = 10;
  CLI::App* count =
      app.add_subcommand("count-params", "Print the trainable parameter count");
  count->add_option("--depth", count_depth, "Network depth")
      ->check(CLI::IsMember(depths))
      ->capture_default_str();
  count->add_option("--shortcut", count_shortcut, "Shortcut mode")
      ->check(CLI::IsMember(shortcut_modes))
      ->capture_default_str();
  count->add_option("--classes", count_classes, "Output classes")->capture_default_str();

  std::size_t bench_in = 16, bench_out = 32, bench_spatial = 32, bench_repeats = 100;
  std::uint64_t bench_seed = 0;
  int bench_threads = 1;
  CLI::App* bench = app.add_subcommand(
      "bench", "Time the hexagonal fast path against a square 3x3 convolution");
  bench->add_option("--in-channels", bench_in, "Input channels")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  bench->add_option("--out-channels", bench_out, "Output channels")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  bench->add_option("--spatial", bench_spatial, "Square input side length")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  bench->add_option("--repeats", bench_repeats, "Timed repetitions")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  bench->add_option("--seed", bench_seed, "Data seed")->capture_default_str();
  bench->add_option("--threads", bench_threads, "Worker threads")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  if (train->parsed()) return run_train(train_args, epochs_opt->count() > 0);
  if (eval->parsed()) return run_eval(eval_args, split_seed_opt->count() > 0);
  if (verify->parsed()) return run_verify_hexconv(verify_cases, verify_seed, verify_threads);
  if (gradcheck->parsed()) return run_gradcheck(gradcheck_seed, gradcheck_threads);
  if (count->parsed()) return run_count_params(count_depth, count_shortcut, count_classes);
  if (bench->parsed())
    return run_bench(bench_in, bench_out, bench_spatial, bench_repeats, bench_seed,
                     bench_threads);
  return 2;
}
