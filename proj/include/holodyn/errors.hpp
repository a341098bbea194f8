#pragma once

#include <stdexcept>
#include <string>

namespace holodyn {

// Error categories map 1:1 onto CLI exit codes (see cli.hpp).
enum class errc {
  config,               // invalid configuration / input
  numerical,            // iteration cap hit, divergence
  base_point_rejected,  // base point too close to the postcritical set
  lift_failed,          // path lift hit a critical point or Newton stalled
  domain,               // value outside a required domain (graphs, levels)
};

class error : public std::runtime_error {
 public:
  error(errc code, const std::string& msg) : std::runtime_error(msg), code_(code) {}
  errc code() const { return code_; }

 private:
  errc code_;
};

}  // namespace holodyn
