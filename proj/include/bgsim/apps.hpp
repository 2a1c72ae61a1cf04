#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "bgsim/types.hpp"

namespace bgsim {

// Installed-app table. Iteration order is declaration order, which keeps every
// per-app sweep deterministic.
class AppRegistry {
 public:
  void install(AppId app) {
    if (!installed(app)) {
      apps_.push_back(std::move(app));
    }
  }

  bool installed(const AppId& app) const {
    return std::find(apps_.begin(), apps_.end(), app) != apps_.end();
  }

  const std::vector<AppId>& apps() const { return apps_; }

 private:
  std::vector<AppId> apps_;
};

}  // namespace bgsim
