#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace iqakit::cli {

/// Process exit codes.
enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kUsage = 2,
  kInvalidRecord = 3,
  kAlignment = 4,
  kIo = 5,
  kMissingCorpusFile = 6,
  kAugmentationFailed = 7,
  kImageDecode = 8,
};

/// Runs one subcommand. `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int run(int argc, char** argv);

}  // namespace iqakit::cli
