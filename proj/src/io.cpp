#include "mmtomo/io.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "mmtomo/hash.hpp"

static_assert(std::endian::native == std::endian::little,
              "payload format is little-endian; big-endian hosts unsupported");

namespace mmt::io {

using nlohmann::json;

namespace {

std::uint64_t payload_hash(const std::string& bytes) {
  Fnv1a h;
  h.update(bytes.data(), bytes.size());
  return h.digest();
}

void append_f32(std::string& out, float v) {
  char buf[4];
  std::memcpy(buf, &v, 4);
  out.append(buf, 4);
}

void append_i32(std::string& out, std::int32_t v) {
  char buf[4];
  std::memcpy(buf, &v, 4);
  out.append(buf, 4);
}

float take_f32(const std::string& in, std::size_t& pos) {
  float v;
  std::memcpy(&v, in.data() + pos, 4);
  pos += 4;
  return v;
}

std::int32_t take_i32(const std::string& in, std::size_t& pos) {
  std::int32_t v;
  std::memcpy(&v, in.data() + pos, 4);
  pos += 4;
  return v;
}

json geometry_to_json(const geometry::AcquisitionGeometry& g) {
  json acqs = json::array();
  for (const auto& a : g.acquisitions()) acqs.push_back({a.b_master, a.delta_b});
  return json{{"wavelength", g.wavelength()},
              {"slant_range", g.slant_range()},
              {"acquisitions", acqs}};
}

geometry::AcquisitionGeometry geometry_from_json(const json& j) {
  std::vector<geometry::Acquisition> acqs;
  for (const auto& a : j.at("acquisitions"))
    acqs.push_back({a.at(0).get<double>(), a.at(1).get<double>()});
  return geometry::AcquisitionGeometry(j.at("wavelength").get<double>(),
                                       j.at("slant_range").get<double>(),
                                       std::move(acqs));
}

json parse_json_file(const fs::path& path) {
  std::string text = read_file(path);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    fail(ErrorKind::io, "malformed JSON in " + path.string() + " at byte " +
                            std::to_string(e.byte) + ": " + e.what());
  }
}

void check_payload(const fs::path& bin_path, const std::string& payload,
                   const json& meta) {
  std::uint64_t expected_bytes = meta.at("payload_bytes").get<std::uint64_t>();
  require(payload.size() == expected_bytes, ErrorKind::io,
          "payload length mismatch for " + bin_path.string());
  std::string expected_hash = meta.at("payload_hash").get<std::string>();
  require(hash_hex(payload_hash(payload)) == expected_hash, ErrorKind::io,
          "payload hash mismatch for " + bin_path.string());
}

}  // namespace

void atomic_write(const fs::path& path, const std::string& bytes) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    require(out.good(), ErrorKind::io, "cannot open for write: " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    require(out.good(), ErrorKind::io, "write failed: " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  require(!ec, ErrorKind::io, "rename failed: " + path.string());
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorKind::io, "cannot open: " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
  return bytes;
}

void write_stack(const fs::path& base_path, const sim::InterferogramStack& stack,
                 const StackMeta& meta) {
  const int w = stack.width();
  const int h = stack.height();
  const int n = stack.count();
  std::string payload;
  payload.reserve(static_cast<std::size_t>(w) * h * n * 16);
  for (int layer = 0; layer < n; ++layer) {
    const auto& L = stack.layer(layer);
    for (std::size_t i = 0; i < L.interferogram.size(); ++i) {
      append_f32(payload, L.interferogram[i].real());
      append_f32(payload, L.interferogram[i].imag());
    }
    for (std::size_t i = 0; i < L.intensity1.size(); ++i)
      append_f32(payload, L.intensity1[i]);
    for (std::size_t i = 0; i < L.intensity2.size(); ++i)
      append_f32(payload, L.intensity2[i]);
  }

  fs::path bin_path = base_path;
  bin_path += ".bin";
  fs::path json_path = base_path;
  json_path += ".json";

  json meta_json{{"format_version", 1},
                 {"kind", meta.kind},
                 {"width", w},
                 {"height", h},
                 {"layers", n},
                 {"geometry", geometry_to_json(stack.geometry())},
                 {"incidence_deg", stack.incidence_deg},
                 {"pixel_spacing",
                  {{"range", stack.pixel_spacing_range},
                   {"azimuth", stack.pixel_spacing_azimuth}}},
                 {"seed", meta.seed},
                 {"config_hash", meta.config_hash},
                 {"payload_file", bin_path.filename().string()},
                 {"payload_bytes", payload.size()},
                 {"payload_hash", hash_hex(payload_hash(payload))}};

  atomic_write(bin_path, payload);
  atomic_write(json_path, meta_json.dump(2) + "\n");
}

sim::InterferogramStack read_stack(const fs::path& base_path, StackMeta* meta) {
  fs::path bin_path = base_path;
  bin_path += ".bin";
  fs::path json_path = base_path;
  json_path += ".json";

  json j = parse_json_file(json_path);
  const int w = j.at("width").get<int>();
  const int h = j.at("height").get<int>();
  const int n = j.at("layers").get<int>();
  std::string payload = read_file(bin_path);
  require(payload.size() ==
              static_cast<std::size_t>(w) * h * n * 4 /*planes*/ * 4 /*bytes*/,
          ErrorKind::io, "stack payload has unexpected length");
  check_payload(bin_path, payload, j);

  std::vector<sim::StackLayer> layers;
  layers.reserve(n);
  std::size_t pos = 0;
  for (int layer = 0; layer < n; ++layer) {
    sim::StackLayer L{Image<cplxf>(w, h), Image<float>(w, h), Image<float>(w, h)};
    for (std::size_t i = 0; i < L.interferogram.size(); ++i) {
      float re = take_f32(payload, pos);
      float im = take_f32(payload, pos);
      L.interferogram[i] = cplxf(re, im);
    }
    for (std::size_t i = 0; i < L.intensity1.size(); ++i)
      L.intensity1[i] = take_f32(payload, pos);
    for (std::size_t i = 0; i < L.intensity2.size(); ++i)
      L.intensity2[i] = take_f32(payload, pos);
    layers.push_back(std::move(L));
  }

  sim::InterferogramStack stack(std::move(layers),
                                geometry_from_json(j.at("geometry")));
  stack.incidence_deg = j.at("incidence_deg").get<double>();
  stack.pixel_spacing_range = j.at("pixel_spacing").at("range").get<double>();
  stack.pixel_spacing_azimuth = j.at("pixel_spacing").at("azimuth").get<double>();
  if (meta) {
    meta->kind = j.at("kind").get<std::string>();
    meta->seed = j.at("seed").get<std::uint64_t>();
    meta->config_hash = j.at("config_hash").get<std::string>();
  }
  return stack;
}

void write_enl(const fs::path& base_path, const Image<float>& enl,
               const std::string& config_hash) {
  std::string payload;
  payload.reserve(enl.size() * 4);
  for (std::size_t i = 0; i < enl.size(); ++i) append_f32(payload, enl[i]);

  fs::path bin_path = base_path;
  bin_path += ".bin";
  fs::path json_path = base_path;
  json_path += ".json";
  json meta{{"format_version", 1},
            {"kind", "enl"},
            {"width", enl.width()},
            {"height", enl.height()},
            {"config_hash", config_hash},
            {"payload_file", bin_path.filename().string()},
            {"payload_bytes", payload.size()},
            {"payload_hash", hash_hex(payload_hash(payload))}};
  atomic_write(bin_path, payload);
  atomic_write(json_path, meta.dump(2) + "\n");
}

Image<float> read_enl(const fs::path& base_path, std::string* config_hash) {
  fs::path bin_path = base_path;
  bin_path += ".bin";
  fs::path json_path = base_path;
  json_path += ".json";
  json j = parse_json_file(json_path);
  const int w = j.at("width").get<int>();
  const int h = j.at("height").get<int>();
  std::string payload = read_file(bin_path);
  require(payload.size() == static_cast<std::size_t>(w) * h * 4, ErrorKind::io,
          "ENL payload has unexpected length");
  check_payload(bin_path, payload, j);
  Image<float> enl(w, h);
  std::size_t pos = 0;
  for (std::size_t i = 0; i < enl.size(); ++i) enl[i] = take_f32(payload, pos);
  if (config_hash) *config_hash = j.at("config_hash").get<std::string>();
  return enl;
}

void write_scatterers(const fs::path& base_path, const inv::ScattererRaster& raster,
                      const ScattererMeta& meta) {
  std::string payload;
  payload.reserve(raster.size() * 28);
  for (std::size_t i = 0; i < raster.size(); ++i) {
    const auto& r = raster[i];
    append_i32(payload, r.order);
    append_f32(payload, static_cast<float>(r.scatterers[0].elevation));
    append_f32(payload, static_cast<float>(r.scatterers[0].power));
    append_f32(payload, static_cast<float>(r.scatterers[1].elevation));
    append_f32(payload, static_cast<float>(r.scatterers[1].power));
    append_f32(payload, static_cast<float>(r.score));
    std::int32_t flags = (r.used_cs ? 1 : 0) | (r.converged ? 2 : 0) |
                         (r.failed ? 4 : 0);
    append_i32(payload, flags);
  }

  fs::path bin_path = base_path;
  bin_path += ".bin";
  fs::path json_path = base_path;
  json_path += ".json";
  json report{{"order_counts", meta.report.order_counts},
              {"cs_pixels", meta.report.cs_pixels},
              {"cs_nonconverged", meta.report.cs_nonconverged},
              {"failed_pixels", meta.report.failed_pixels},
              {"errors", meta.report.errors}};
  json j{{"format_version", 1},
         {"kind", "scatterers"},
         {"width", raster.width()},
         {"height", raster.height()},
         {"config_hash", meta.config_hash},
         {"incidence_deg", meta.incidence_deg},
         {"grid", {{"min", meta.grid_min},
                   {"spacing", meta.grid_spacing},
                   {"count", meta.grid_count}}},
         {"pixel_spacing", {{"range", meta.pixel_spacing_range},
                            {"azimuth", meta.pixel_spacing_azimuth}}},
         {"report", report},
         {"payload_file", bin_path.filename().string()},
         {"payload_bytes", payload.size()},
         {"payload_hash", hash_hex(payload_hash(payload))}};
  atomic_write(bin_path, payload);
  atomic_write(json_path, j.dump(2) + "\n");
}

inv::ScattererRaster read_scatterers(const fs::path& base_path,
                                     ScattererMeta* meta) {
  fs::path bin_path = base_path;
  bin_path += ".bin";
  fs::path json_path = base_path;
  json_path += ".json";
  json j = parse_json_file(json_path);
  const int w = j.at("width").get<int>();
  const int h = j.at("height").get<int>();
  std::string payload = read_file(bin_path);
  require(payload.size() == static_cast<std::size_t>(w) * h * 28, ErrorKind::io,
          "scatterer payload has unexpected length");
  check_payload(bin_path, payload, j);

  inv::ScattererRaster raster(w, h);
  std::size_t pos = 0;
  for (std::size_t i = 0; i < raster.size(); ++i) {
    auto& r = raster[i];
    r.order = take_i32(payload, pos);
    r.scatterers[0].elevation = take_f32(payload, pos);
    r.scatterers[0].power = take_f32(payload, pos);
    r.scatterers[1].elevation = take_f32(payload, pos);
    r.scatterers[1].power = take_f32(payload, pos);
    r.score = take_f32(payload, pos);
    std::int32_t flags = take_i32(payload, pos);
    r.used_cs = flags & 1;
    r.converged = flags & 2;
    r.failed = flags & 4;
  }
  if (meta) {
    meta->config_hash = j.at("config_hash").get<std::string>();
    meta->incidence_deg = j.at("incidence_deg").get<double>();
    meta->grid_min = j.at("grid").at("min").get<double>();
    meta->grid_spacing = j.at("grid").at("spacing").get<double>();
    meta->grid_count = j.at("grid").at("count").get<int>();
    meta->pixel_spacing_range = j.at("pixel_spacing").at("range").get<double>();
    meta->pixel_spacing_azimuth = j.at("pixel_spacing").at("azimuth").get<double>();
    meta->report.order_counts = j.at("report").at("order_counts").get<std::array<int, 3>>();
    meta->report.cs_pixels = j.at("report").at("cs_pixels").get<int>();
    meta->report.cs_nonconverged = j.at("report").at("cs_nonconverged").get<int>();
    meta->report.failed_pixels = j.at("report").at("failed_pixels").get<int>();
    meta->report.errors =
        j.at("report").at("errors").get<std::vector<std::string>>();
  }
  return raster;
}

void write_truth(const fs::path& json_path, const TruthData& truth) {
  std::string payload;
  payload.reserve(truth.footprints.size() * 4);
  for (std::size_t i = 0; i < truth.footprints.size(); ++i)
    append_i32(payload, truth.footprints[i]);
  fs::path bin_path = json_path.parent_path() / "footprints.bin";

  json objects = json::array();
  for (const auto& o : truth.objects)
    objects.push_back({{"id", o.id}, {"height", o.height_m}});
  json j{{"format_version", 1},
         {"kind", "truth"},
         {"width", truth.footprints.width()},
         {"height", truth.footprints.height()},
         {"seed", truth.seed},
         {"config_hash", truth.config_hash},
         {"incidence_deg", truth.incidence_deg},
         {"pixel_spacing", {{"range", truth.pixel_spacing_range},
                            {"azimuth", truth.pixel_spacing_azimuth}}},
         {"objects", objects},
         {"footprints_file", bin_path.filename().string()},
         {"footprints_bytes", payload.size()},
         {"footprints_hash", hash_hex(payload_hash(payload))}};
  atomic_write(bin_path, payload);
  atomic_write(json_path, j.dump(2) + "\n");
}

TruthData read_truth(const fs::path& json_path) {
  json j = parse_json_file(json_path);
  const int w = j.at("width").get<int>();
  const int h = j.at("height").get<int>();
  fs::path bin_path =
      json_path.parent_path() / j.at("footprints_file").get<std::string>();
  std::string payload = read_file(bin_path);
  require(payload.size() == static_cast<std::size_t>(w) * h * 4, ErrorKind::io,
          "footprint payload has unexpected length");
  require(hash_hex(payload_hash(payload)) ==
              j.at("footprints_hash").get<std::string>(),
          ErrorKind::io, "footprint payload hash mismatch");

  TruthData truth;
  truth.footprints = Image<int>(w, h);
  std::size_t pos = 0;
  for (std::size_t i = 0; i < truth.footprints.size(); ++i)
    truth.footprints[i] = take_i32(payload, pos);
  for (const auto& o : j.at("objects"))
    truth.objects.push_back(
        {o.at("id").get<int>(), o.at("height").get<double>()});
  truth.incidence_deg = j.at("incidence_deg").get<double>();
  truth.pixel_spacing_range = j.at("pixel_spacing").at("range").get<double>();
  truth.pixel_spacing_azimuth = j.at("pixel_spacing").at("azimuth").get<double>();
  truth.seed = j.at("seed").get<std::uint64_t>();
  truth.config_hash = j.at("config_hash").get<std::string>();
  return truth;
}

void write_heights_csv(const fs::path& path,
                       const std::vector<fusion::ObjectHeight>& heights,
                       const std::string& config_hash) {
  std::string out;
  out += "# config_hash=" + config_hash + "\n";
  out += "object_id,height,sample_count,robust_std,flag\n";
  char line[160];
  for (const auto& h : heights) {
    const char* flag = !h.estimated ? "no_estimate"
                       : h.converged ? "ok"
                                     : "fallback_median";
    if (h.estimated)
      std::snprintf(line, sizeof line, "%d,%.6f,%d,%.6f,%s\n", h.object_id,
                    h.height, h.sample_count, h.robust_std, flag);
    else
      std::snprintf(line, sizeof line, "%d,nan,0,nan,%s\n", h.object_id, flag);
    out += line;
  }
  atomic_write(path, out);
}

std::vector<fusion::ObjectHeight> read_heights_csv(const fs::path& path,
                                                   std::string* config_hash) {
  std::string text = read_file(path);
  std::vector<fusion::ObjectHeight> out;
  std::size_t pos = 0;
  bool header_seen = false;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    std::string line = text.substr(pos, end - pos);
    pos = end + 1;
    if (line.empty()) continue;
    if (line[0] == '#') {
      auto eq = line.find("config_hash=");
      if (eq != std::string::npos && config_hash)
        *config_hash = line.substr(eq + 12);
      continue;
    }
    if (!header_seen) {
      header_seen = true;  // column header
      continue;
    }
    fusion::ObjectHeight h;
    char flag[32] = {0};
    double height = 0.0, robust_std = 0.0;
    int fields = std::sscanf(line.c_str(), "%d,%lf,%d,%lf,%31s", &h.object_id,
                             &height, &h.sample_count, &robust_std, flag);
    require(fields == 5, ErrorKind::io, "malformed heights CSV line: " + line);
    h.height = height;
    h.robust_std = robust_std;
    h.estimated = std::string(flag) != "no_estimate";
    h.converged = std::string(flag) == "ok";
    out.push_back(h);
  }
  return out;
}

void write_report(const fs::path& path, const val::ComparisonReport& report,
                  const std::string& config_hash, const std::string& provenance) {
  json diffs = json::array();
  for (const auto& [id, diff] : report.diffs)
    diffs.push_back({{"id", id}, {"diff", diff}});
  json j{{"format_version", 1},
         {"kind", "comparison_report"},
         {"config_hash", config_hash},
         {"reference_provenance", provenance},
         {"compared", report.compared},
         {"retained", report.retained},
         {"dropped", report.dropped},
         {"unestimated", report.unestimated},
         {"within_1m_fraction", report.within_1m_fraction},
         {"within_2m_fraction", report.within_2m_fraction},
         {"std_retained", report.std_retained},
         {"truncation", report.truncation},
         {"bin_width", report.bin_width},
         {"bin_edges", report.bin_edges},
         {"histogram", report.histogram},
         {"diffs", diffs}};
  atomic_write(path, j.dump(2) + "\n");
}

void write_histogram_csv(const fs::path& path, const val::ComparisonReport& report) {
  std::string out = "bin_lo,bin_hi,count\n";
  char line[96];
  for (std::size_t b = 0; b < report.histogram.size(); ++b) {
    std::snprintf(line, sizeof line, "%.3f,%.3f,%d\n", report.bin_edges[b],
                  report.bin_edges[b + 1], report.histogram[b]);
    out += line;
  }
  atomic_write(path, out);
}

val::ReferenceModel read_reference(const fs::path& path) {
  json j = parse_json_file(path);
  val::ReferenceModel model;
  if (j.contains("objects")) {
    model.kind = val::ReferenceModel::Kind::objects;
    for (const auto& o : j.at("objects"))
      model.object_heights[o.at("id").get<int>()] = o.at("height").get<double>();
    model.provenance = j.value("kind", "") == "truth" ? "simulator truth"
                                                      : "external objects";
  } else if (j.contains("points")) {
    model.kind = val::ReferenceModel::Kind::points;
    for (const auto& p : j.at("points"))
      model.points.push_back({p.at(0).get<double>(), p.at(1).get<double>(),
                              p.at(2).get<double>()});
    model.provenance = "external points";
  } else {
    fail(ErrorKind::io,
         "reference file needs an 'objects' or 'points' array: " + path.string());
  }
  return model;
}

void write_manifest(const fs::path& path, const Manifest& manifest) {
  json stages = json::array();
  for (const auto& s : manifest.stages)
    stages.push_back({{"name", s.name},
                      {"wall_time_s", s.wall_time_s},
                      {"artifacts", s.artifacts}});
  json j{{"format_version", 1},
         {"kind", "manifest"},
         {"config_hash", manifest.config_hash},
         {"tool_version", manifest.tool_version},
         {"stages", stages}};
  atomic_write(path, j.dump(2) + "\n");
}

std::optional<Manifest> read_manifest(const fs::path& path) {
  if (!fs::exists(path)) return std::nullopt;
  json j = parse_json_file(path);
  Manifest m;
  m.config_hash = j.at("config_hash").get<std::string>();
  m.tool_version = j.at("tool_version").get<std::string>();
  for (const auto& s : j.at("stages"))
    m.stages.push_back({s.at("name").get<std::string>(),
                        s.at("wall_time_s").get<double>(),
                        s.at("artifacts").get<std::vector<std::string>>()});
  return m;
}

}  // namespace mmt::io
