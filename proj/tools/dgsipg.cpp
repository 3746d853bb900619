// dgsipg <study> --config <file> [--set key=value ...]

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "dgsipg/studies.hpp"

namespace {

std::string timestamp() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  localtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y%m%d_%H%M%S", &tm);
  return buf;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw dgsipg::Error("cannot write '" + path.string() + "'");
  out << text;
  std::cout << "wrote " << path.string() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Matrix-free DG spectral-element SIPG Helmholtz solver"};
  std::string study, config_path;
  std::vector<std::string> overrides;
  app.add_option("study", study, "symmetry, convergence or bench")
      ->required()
      ->check(CLI::IsMember({"symmetry", "convergence", "bench"}));
  app.add_option("--config", config_path, "key = value configuration file")->required();
  app.add_option("--set", overrides, "override a configuration key (key=value)");
  CLI11_PARSE(app, argc, argv);

  try {
    dgsipg::Config cfg = dgsipg::Config::from_file(config_path);
    for (const auto& o : overrides) cfg.apply_override(o);
    const dgsipg::RunConfig rc = dgsipg::parse_run_config(cfg);

    dgsipg::StudyResult res;
    if (study == "symmetry") res = dgsipg::run_symmetry_study(rc);
    else if (study == "convergence") res = dgsipg::run_convergence_study(rc);
    else res = dgsipg::run_bench(rc);

    const std::filesystem::path dir(rc.output_dir);
    std::filesystem::create_directories(dir);
    std::cout << res.summary;
    write_file(dir / (study + "_" + timestamp() + ".csv"), res.table.to_csv());
    if (study == "symmetry") write_file(dir / "symmetry_report.txt", res.report);
    if (!res.probe_matrix.empty()) write_file(dir / "probe_matrix.txt", res.probe_matrix);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
