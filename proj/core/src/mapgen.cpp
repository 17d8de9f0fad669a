#include "trav/mapgen.hpp"

#include <filesystem>
#include <fstream>

#include <json.hpp>

namespace trav {
namespace fs = std::filesystem;

void SemanticGrid::validate() const {
  if (geom.rows < 1 || geom.cols < 1 || !(geom.resolution > 0.0))
    throw std::invalid_argument("SemanticGrid: bad geometry");
  if (cells.size() != static_cast<size_t>(geom.rows) * geom.cols)
    throw std::invalid_argument("SemanticGrid: cell count mismatch");
  for (int16_t c : cells)
    if (c >= n_classes || (c < 0 && c != -1))
      throw std::invalid_argument("SemanticGrid: class id out of range");
}

SpeedDistributionMap generate_sdm(const SemanticGrid& grid,
                                  const MlpModel& model, int layers) {
  grid.validate();
  if (model.n_classes() < grid.n_classes)
    throw std::invalid_argument("generate_sdm: model covers fewer classes than grid");
  SpeedDistributionMap sdm(grid.geom, layers, model.s_max());

  // One forward pass per (class, layer), broadcast to all matching cells.
  std::vector<SpeedPmf> cache;
  cache.reserve(static_cast<size_t>(grid.n_classes) * layers);
  for (int c = 0; c < grid.n_classes; ++c)
    for (int k = 0; k < layers; ++k)
      cache.push_back(model.predict_pmf(c, (k + 0.5) * model.s_max() / layers));

  const size_t plane = static_cast<size_t>(grid.geom.rows) * grid.geom.cols;
  for (size_t i = 0; i < plane; ++i) {
    const int16_t c = grid.cells[i];
    if (c < 0) continue;
    for (int k = 0; k < layers; ++k)
      sdm.cells[static_cast<size_t>(k) * plane + i] = cache[c * layers + k];
  }
  return sdm;
}

RiskSpeedMap generate_risk_map(const SemanticGrid& grid, const MlpModel& model,
                               int layers, const RiskParams& params) {
  return build_risk_map(generate_sdm(grid, model, layers), params);
}

namespace {

nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw std::runtime_error("parse error in " + path + ": " + e.what());
  }
  return j;
}

GridGeometry geometry_from_json(const nlohmann::json& j) {
  GridGeometry g;
  g.rows = j.at("H").get<int>();
  g.cols = j.at("W").get<int>();
  g.resolution = j.at("resolution").get<double>();
  g.origin_x = j.at("origin")[0].get<double>();
  g.origin_y = j.at("origin")[1].get<double>();
  return g;
}

void geometry_to_json(const GridGeometry& g, nlohmann::json& j) {
  j["H"] = g.rows;
  j["W"] = g.cols;
  j["resolution"] = g.resolution;
  j["origin"] = {g.origin_x, g.origin_y};
}

}  // namespace

SemanticGrid load_semantic_grid(const std::string& path) {
  const auto j = read_json_file(path);
  SemanticGrid grid;
  grid.geom = geometry_from_json(j);
  grid.n_classes = j.at("C").get<int>();
  const size_t n = static_cast<size_t>(grid.geom.rows) * grid.geom.cols;
  if (j.contains("cells")) {
    grid.cells = j.at("cells").get<std::vector<int16_t>>();
  } else if (j.contains("cells_file")) {
    const fs::path bin = fs::path(path).parent_path() /
                         j.at("cells_file").get<std::string>();
    std::ifstream in(bin, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + bin.string());
    grid.cells.resize(n);
    in.read(reinterpret_cast<char*>(grid.cells.data()),
            static_cast<std::streamsize>(n * sizeof(int16_t)));
    if (static_cast<size_t>(in.gcount()) != n * sizeof(int16_t))
      throw std::runtime_error("truncated cell data in " + bin.string());
  } else {
    throw std::runtime_error(path + ": neither 'cells' nor 'cells_file' present");
  }
  if (grid.cells.size() != n)
    throw std::runtime_error(path + ": cell count does not match H*W");
  grid.validate();
  return grid;
}

void save_semantic_grid(const SemanticGrid& grid, const std::string& path,
                        bool binary_cells) {
  grid.validate();
  nlohmann::json j;
  geometry_to_json(grid.geom, j);
  j["C"] = grid.n_classes;
  if (binary_cells) {
    const fs::path bin = fs::path(path).replace_extension(".cells.bin");
    std::ofstream out(bin, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + bin.string());
    out.write(reinterpret_cast<const char*>(grid.cells.data()),
              static_cast<std::streamsize>(grid.cells.size() * sizeof(int16_t)));
    j["cells_file"] = bin.filename().string();
  } else {
    j["cells"] = grid.cells;
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << j.dump() << "\n";
}

void save_risk_map(const RiskSpeedMap& map, const std::string& path) {
  nlohmann::json j;
  geometry_to_json(map.geom, j);
  j["K"] = map.layers;
  j["s_max"] = map.s_max;
  const fs::path bin = fs::path(path).replace_extension(".values.bin");
  j["values_file"] = bin.filename().string();
  std::vector<float> vals(map.values.begin(), map.values.end());
  std::ofstream bout(bin, std::ios::binary);
  if (!bout) throw std::runtime_error("cannot open " + bin.string());
  bout.write(reinterpret_cast<const char*>(vals.data()),
             static_cast<std::streamsize>(vals.size() * sizeof(float)));
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << j.dump() << "\n";
}

RiskSpeedMap load_risk_map(const std::string& path) {
  const auto j = read_json_file(path);
  RiskSpeedMap map(geometry_from_json(j), j.at("K").get<int>(),
                   j.at("s_max").get<double>());
  const fs::path bin = fs::path(path).parent_path() /
                       j.at("values_file").get<std::string>();
  std::ifstream in(bin, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + bin.string());
  std::vector<float> vals(map.values.size());
  in.read(reinterpret_cast<char*>(vals.data()),
          static_cast<std::streamsize>(vals.size() * sizeof(float)));
  if (static_cast<size_t>(in.gcount()) != vals.size() * sizeof(float))
    throw std::runtime_error("truncated value data in " + bin.string());
  std::copy(vals.begin(), vals.end(), map.values.begin());
  return map;
}

void save_sdm(const SpeedDistributionMap& sdm, const std::string& path) {
  int k_out = 0;
  for (const auto& c : sdm.cells)
    if (c) {
      k_out = c->bins();
      break;
    }
  if (k_out == 0) throw std::runtime_error("save_sdm: all cells unknown");
  nlohmann::json j;
  geometry_to_json(sdm.geom, j);
  j["K"] = sdm.layers;
  j["k_out"] = k_out;
  j["s_max"] = sdm.s_max;
  const fs::path bin = fs::path(path).replace_extension(".probs.bin");
  j["probs_file"] = bin.filename().string();
  std::vector<float> vals;
  vals.reserve(sdm.cells.size() * k_out);
  for (const auto& c : sdm.cells) {
    if (c)
      for (int b = 0; b < k_out; ++b) vals.push_back(static_cast<float>(c->prob(b)));
    else
      for (int b = 0; b < k_out; ++b) vals.push_back(-1.0f);
  }
  std::ofstream bout(bin, std::ios::binary);
  if (!bout) throw std::runtime_error("cannot open " + bin.string());
  bout.write(reinterpret_cast<const char*>(vals.data()),
             static_cast<std::streamsize>(vals.size() * sizeof(float)));
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << j.dump() << "\n";
}

SpeedDistributionMap load_sdm(const std::string& path) {
  const auto j = read_json_file(path);
  SpeedDistributionMap sdm(geometry_from_json(j), j.at("K").get<int>(),
                           j.at("s_max").get<double>());
  const int k_out = j.at("k_out").get<int>();
  const fs::path bin = fs::path(path).parent_path() /
                       j.at("probs_file").get<std::string>();
  std::ifstream in(bin, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + bin.string());
  std::vector<float> vals(sdm.cells.size() * k_out);
  in.read(reinterpret_cast<char*>(vals.data()),
          static_cast<std::streamsize>(vals.size() * sizeof(float)));
  if (static_cast<size_t>(in.gcount()) != vals.size() * sizeof(float))
    throw std::runtime_error("truncated prob data in " + bin.string());
  for (size_t i = 0; i < sdm.cells.size(); ++i) {
    if (vals[i * k_out] < 0.0f) continue;
    std::vector<double> probs(vals.begin() + i * k_out,
                              vals.begin() + (i + 1) * k_out);
    // float round-off: renormalize before validation
    double sum = 0.0;
    for (double p : probs) sum += p;
    for (double& p : probs) p /= sum;
    sdm.cells[i] = SpeedPmf(std::move(probs), sdm.s_max);
  }
  return sdm;
}

void export_layer_csv(const RiskSpeedMap& map, int layer,
                      const std::string& path) {
  if (layer < 0 || layer >= map.layers)
    throw std::invalid_argument("export_layer_csv: layer out of range");
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  for (int h = 0; h < map.geom.rows; ++h) {
    for (int w = 0; w < map.geom.cols; ++w) {
      if (w) out << ',';
      out << map.at(layer, h, w);
    }
    out << '\n';
  }
}

}  // namespace trav
