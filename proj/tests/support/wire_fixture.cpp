// Copyright 2026 The fairlds Authors
// SPDX-License-Identifier: Apache-2.0

// Wire-protocol test server. Echo mode: score returns the first
// len(attributes) coordinates of each latent, transform returns its input,
// sample_prior returns seeded normals. Misbehaviour modes exercise the client.

#include <iostream>
#include <string>
#include <thread>

#include <CLI11.hpp>

#include "lds/wire.hpp"

int main(int argc, char** argv) {
  CLI::App app{"lds wire fixture"};
  std::size_t dim = 8;
  std::vector<std::string> attributes{"a0"};
  int version = lds::kWireVersion;
  bool transform = true;
  std::string misbehave = "none";
  app.add_option("--dim", dim);
  app.add_option("--attributes", attributes)->delimiter(',');
  app.add_option("--version", version);
  app.add_option("--transform", transform);
  app.add_option("--misbehave", misbehave)
      ->check(CLI::IsMember({"none", "garbage", "wrong_id", "die", "hang", "short_array", "error"}));
  CLI11_PARSE(app, argc, argv);

  std::ios::sync_with_stdio(false);
  lds::Handshake h;
  h.version = version;
  h.dim = dim;
  h.attributes = attributes;
  h.can_transform = transform;
  std::cout << lds::encode_handshake(h) << '\n' << std::flush;

  std::string line;
  while (std::getline(std::cin, line)) {
    if (misbehave == "die") return 3;
    if (misbehave == "hang") {
      std::this_thread::sleep_for(std::chrono::seconds(30));
      return 0;
    }
    lds::WireResponse r;
    try {
      const lds::WireRequest req = lds::parse_request(line);
      r.id = req.id;
      switch (req.op) {
        case lds::WireOp::kSamplePrior: {
          lds::Rng rng(req.seed, 0);
          r.array.resize(static_cast<Eigen::Index>(req.n), static_cast<Eigen::Index>(dim));
          for (Eigen::Index i = 0; i < r.array.size(); ++i) r.array.data()[i] = rng.normal();
          break;
        }
        case lds::WireOp::kScore:
          if (req.array.cols() != static_cast<Eigen::Index>(dim)) {
            throw lds::Error(lds::ErrorKind::kDimension, "score: expected dim " + std::to_string(dim));
          }
          r.array = req.array.leftCols(static_cast<Eigen::Index>(attributes.size()));
          break;
        case lds::WireOp::kTransform:
          if (!transform) {
            r.status = lds::WireStatus::kUnsupported;
            r.message = "transform not offered";
          } else {
            r.array = req.array;
          }
          break;
      }
    } catch (const lds::Error& e) {
      r.id = lds::salvage_id(line);
      r.status = e.kind() == lds::ErrorKind::kUnsupportedOp ? lds::WireStatus::kUnsupported
                                                            : lds::WireStatus::kError;
      r.message = e.what();
    }
    if (misbehave == "garbage") {
      std::cout << "this is not json\n" << std::flush;
      continue;
    }
    if (misbehave == "wrong_id") r.id += 1000;
    if (misbehave == "error") {
      r.status = lds::WireStatus::kError;
      r.message = "planted failure";
    }
    std::string out = lds::encode_response(r);
    if (misbehave == "short_array") {
      const auto at = out.find("\"f32le\":\"");
      if (at != std::string::npos) out.erase(at + 9, 8);
    }
    std::cout << out << '\n' << std::flush;
  }
  return 0;
}
