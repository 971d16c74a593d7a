#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "floodtwin/pipeline.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Write a self-contained floodtwin case on a synthetic valley"};
  std::string out = "example";
  std::size_t samples = 40;
  app.add_option("--out", out, "case directory");
  app.add_option("--samples", samples, "calibration sample count written to the config");
  CLI11_PARSE(app, argc, argv);
  try {
    floodtwin::ExampleCase ex;
    ex.calibration_samples = samples;
    floodtwin::write_example_case(out, ex);
  } catch (const std::exception& e) {
    std::cerr << "floodtwin-example: " << e.what() << "\n";
    return 2;
  }
  std::cout << "case written to " << out << "\n";
  return 0;
}
