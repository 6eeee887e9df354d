#pragma once

// Entry point of the t2m command line tool.
//
// Exit codes:
//   0  success
//   1  runtime error (missing resources, malformed files, ...)
//   2  usage error (bad flags, empty sentence, invalid config values)
//   3  no data (empty corpus directory or empty split)
//   4  corpus ingestion error
//   5  checkpoint incompatible with the cache, skeleton or embedder

namespace t2m::cli {

enum ExitCode : int { kOk = 0, kError = 1, kUsage = 2, kNoData = 3, kIngest = 4, kCheckpoint = 5 };

int run(int argc, const char* const* argv);

}  // namespace t2m::cli
