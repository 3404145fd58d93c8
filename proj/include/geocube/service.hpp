#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>

#include "geocube/cube.hpp"
#include "geocube/snapshot.hpp"

namespace httplib {
class Server;
}

namespace geocube {

// Everything a request reads, bound to one snapshot version.
struct ServiceState {
  SnapshotManifest manifest;
  std::unique_ptr<TrajectoryStore> store;
  std::unique_ptr<Cube> cube;
  // Flu-flagged footprints sorted by time, for the risk surface.
  std::vector<std::pair<Timestamp, LonLat>> flu_points;
};

struct ApiResponse {
  int status = 200;
  std::string body;  // JSON
};

class Service {
 public:
  // Throws Error(kSnapshotMissing) when the directory holds no snapshot.
  explicit Service(std::filesystem::path snapshot_dir);
  ~Service();

  // Request handling without a socket. `params` are decoded query parameters.
  ApiResponse handle(const std::string& method, const std::string& path,
                     const std::multimap<std::string, std::string>& params,
                     const std::string& body = "") const;

  // Swaps in a newer snapshot if the manifest version moved. Returns true if swapped.
  bool reload_if_changed();
  std::int64_t version() const;

  // Binds (port 0 picks a free port) and serves on a background thread.
  // Throws Error(kPortInUse). Returns the bound port.
  int start(int port, std::chrono::milliseconds reload_interval = std::chrono::milliseconds(500));
  void stop();
  // start() then block until stop() (or process exit).
  void serve(int port);

 private:
  std::shared_ptr<const ServiceState> state() const;

  SnapshotDir dir_;
  mutable std::mutex mutex_;
  std::shared_ptr<const ServiceState> state_;
  std::unique_ptr<httplib::Server> server_;
  std::thread server_thread_;
  std::thread reload_thread_;
  std::atomic<bool> running_{false};
};

std::shared_ptr<const ServiceState> load_state(const SnapshotDir& dir);

}  // namespace geocube
