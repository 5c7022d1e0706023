/* Copyright 2026 The coffeelab Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef COFFEELAB_TESTS_COMMON_SERVICE_RUNNER_H_
#define COFFEELAB_TESTS_COMMON_SERVICE_RUNNER_H_

#include <memory>
#include <string>
#include <thread>

#include "coffeelab/harvest_service.h"
#include "coffeelab/image.h"
#include "httplib.h"

namespace coffeelab::testing {

// A HarvestService on an ephemeral loopback port, served from a thread.
class ServiceRunner {
 public:
  explicit ServiceRunner(ServiceConfig config) {
    config.host = "127.0.0.1";
    service_ = std::make_unique<HarvestService>(std::move(config));
    port_ = service_->BindToAnyPort();
    thread_ = std::thread([this] { service_->ListenAfterBind(); });
    service_->WaitUntilReady();
  }
  ~ServiceRunner() {
    service_->Stop();
    if (thread_.joinable()) thread_.join();
  }
  ServiceRunner(const ServiceRunner&) = delete;
  ServiceRunner& operator=(const ServiceRunner&) = delete;

  httplib::Client Client() const {
    httplib::Client c("127.0.0.1", port_);
    c.set_read_timeout(60, 0);
    return c;
  }
  HarvestService& service() { return *service_; }
  int port() const { return port_; }

 private:
  std::unique_ptr<HarvestService> service_;
  int port_ = 0;
  std::thread thread_;
};

inline httplib::MultipartFormDataItems AnalyzeForm(const RgbImage& image,
                                                   const std::string& captured_at,
                                                   const std::string& mode = "") {
  const auto png = EncodePng(image);
  httplib::MultipartFormDataItems items = {
      {"image", std::string(png.begin(), png.end()), "image.png", "image/png"}};
  if (!captured_at.empty()) items.push_back({"captured_at", captured_at, "", ""});
  if (!mode.empty()) items.push_back({"mode", mode, "", ""});
  return items;
}

}  // namespace coffeelab::testing

#endif  // COFFEELAB_TESTS_COMMON_SERVICE_RUNNER_H_
