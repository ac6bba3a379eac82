#pragma once

namespace pdgplay {

/// Sets the spdlog level from PDGPLAY_LOG (error|warn|info|debug; default
/// warn) and routes log output to stderr.
void init_logging();

}  // namespace pdgplay
