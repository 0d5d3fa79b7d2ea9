#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "kerrsym/cli.hpp"

int main(int argc, char** argv) {
  namespace kc = kerrsym::cli;
  CLI::App app{"Driven Kerr oscillator spectroscopy"};
  std::string config_path;
  std::string out_dir;
  unsigned threads = 0;
  bool seedless = true;
  app.add_option("--config", config_path, "JSON run configuration")->required();
  app.add_option("--out", out_dir, "Output directory (overrides the config)");
  app.add_option("--threads", threads, "Worker threads, 0 = auto");
  app.add_flag("--seedless", seedless, "No RNG is used; accepted for compatibility");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kc::kExitOk : kc::kExitConfig;
  }

  std::ifstream in(config_path);
  if (!in) {
    std::cerr << "i/o error: cannot read " << config_path << '\n';
    return kc::kExitIo;
  }
  std::stringstream buf;
  buf << in.rdbuf();

  kc::RunConfig cfg;
  try {
    cfg = kc::parse_config_text(buf.str());
  } catch (const kc::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kc::kExitConfig;
  }
  if (!out_dir.empty()) cfg.out_dir = out_dir;
  cfg.threads = threads;
  return kc::run(cfg);
}
