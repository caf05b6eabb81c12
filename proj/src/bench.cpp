#include "ale/bench.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "ale/errors.hpp"
#include "ale/image_io.hpp"
#include "ale/rng.hpp"

namespace ale {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string slug(const std::string& edit_type) {
  std::string s = edit_type;
  std::replace(s.begin(), s.end(), '+', '_');
  return s;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  out << text;
  if (!out) throw IoError("short write to " + path);
}

// Draws uniformly from `pool` minus `used` minus the optional `declared`
// existing attribute.
std::string sample_attribute(Rng& rng, const std::vector<std::string>& pool,
                             std::set<std::string>& used,
                             const std::optional<std::string>& declared,
                             const std::string& what) {
  std::vector<std::string> candidates;
  for (const auto& v : pool) {
    if (used.count(v)) continue;
    if (declared && v == *declared) continue;
    candidates.push_back(v);
  }
  if (candidates.empty())
    throw ManifestError("attribute dictionary for " + what +
                        " is too small for this scenario");
  const std::string pick =
      candidates[static_cast<std::size_t>(rng.next_below(candidates.size()))];
  used.insert(pick);
  return pick;
}

std::string with_article(const std::string& phrase) {
  return article_for(phrase) + " " + phrase;
}

std::string number_formatted(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

struct Accumulator {
  int count = 0;
  double tels = 0, ep = 0, psnr = 0, ssim = 0, mse = 0;
  int tels_n = 0, tils_n = 0, lpips_n = 0, sd_n = 0;
  double tils = 0, lpips = 0, sd = 0;

  void add(const LeakageReport& r) {
    ++count;
    if (r.tels) { tels += *r.tels; ++tels_n; }
    if (r.tils) { tils += *r.tils; ++tils_n; }
    ep += r.editing_performance;
    psnr += r.psnr;
    ssim += r.ssim;
    mse += r.mse;
    if (r.lpips) { lpips += *r.lpips; ++lpips_n; }
    if (r.structure_distance) { sd += *r.structure_distance; ++sd_n; }
  }

  std::string row(const std::string& group) const {
    auto mean = [](double sum, int n) {
      return n ? number_formatted(sum / n) : std::string();
    };
    std::ostringstream ss;
    ss << group << ',' << count << ',' << mean(tels, tels_n) << ','
       << mean(tils, tils_n) << ',' << mean(ep, count) << ','
       << mean(psnr, count) << ',' << mean(ssim, count) << ','
       << mean(mse, count) << ',' << mean(lpips, lpips_n) << ','
       << mean(sd, sd_n) << '\n';
    return ss.str();
  }
};

json attrs_to_json(const SampledAttributes& a) {
  json j = json::object();
  j["color"]      = a.color ? json(*a.color) : json(nullptr);
  j["new_object"] = a.new_object ? json(*a.new_object) : json(nullptr);
  j["material"]   = a.material ? json(*a.material) : json(nullptr);
  return j;
}

SampledAttributes attrs_from_json(const json& j) {
  SampledAttributes a;
  if (!j.at("color").is_null()) a.color = j.at("color").get<std::string>();
  if (!j.at("new_object").is_null())
    a.new_object = j.at("new_object").get<std::string>();
  if (!j.at("material").is_null())
    a.material = j.at("material").get<std::string>();
  return a;
}

}  // namespace

const std::vector<std::string>& edit_types() {
  static const std::vector<std::string> kTypes = {
      "color", "object", "material", "color+object", "object+material"};
  return kTypes;
}

AttributeDictionaries AttributeDictionaries::defaults() {
  AttributeDictionaries d;
  d.colors = {"red",  "blue",  "green", "yellow", "purple", "orange",
              "pink", "brown", "black", "white",  "golden", "silver"};
  d.objects = {"car",   "bus",    "boat",  "truck", "cat",      "dog",
               "wolf",  "horse",  "apple", "pumpkin", "pepper", "chair",
               "table", "lamp",   "vase",  "guitar",  "clock",  "kettle",
               "backpack", "helmet"};
  d.materials = {"gold",    "silver", "wood", "glass",   "marble", "steel",
                 "copper",  "leather", "ice",  "jade",    "ceramic", "bronze"};
  return d;
}

AttributeDictionaries AttributeDictionaries::load(const std::string& path) {
  const json j = json::parse(read_file(path));
  AttributeDictionaries d;
  d.colors    = j.at("colors").get<std::vector<std::string>>();
  d.objects   = j.at("objects").get<std::vector<std::string>>();
  d.materials = j.at("materials").get<std::vector<std::string>>();
  if (d.colors.empty() || d.objects.empty() || d.materials.empty())
    throw ManifestError("attribute dictionaries must not be empty");
  return d;
}

std::string render_prompt(const std::string& edit_type,
                          const std::string& src_object,
                          const SampledAttributes& attrs) {
  auto need = [&](const std::optional<std::string>& v,
                  const char* what) -> const std::string& {
    if (!v)
      throw MissingAttribute(std::string("edit type ") + edit_type +
                             " needs a sampled " + what);
    return *v;
  };
  if (edit_type == "color")
    return need(attrs.color, "color") + "-colored " + src_object;
  if (edit_type == "object") return need(attrs.new_object, "object");
  if (edit_type == "material")
    return src_object + " made of " + need(attrs.material, "material");
  if (edit_type == "color+object")
    return need(attrs.color, "color") + "-colored " +
           need(attrs.new_object, "object");
  if (edit_type == "object+material")
    return need(attrs.new_object, "object") + " made of " +
           need(attrs.material, "material");
  throw RangeError("unknown edit type: " + edit_type);
}

std::string article_for(const std::string& phrase) {
  if (phrase.empty()) return "a";
  switch (std::tolower(static_cast<unsigned char>(phrase[0]))) {
    case 'a': case 'e': case 'i': case 'o': case 'u': return "an";
    default: return "a";
  }
}

ImageManifest ImageManifest::load(const std::string& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw ManifestError("cannot parse manifest " + path + ": " + e.what());
  }
  ImageManifest m;
  if (!j.contains("images") || !j.at("images").is_array() ||
      j.at("images").empty())
    throw ManifestError("manifest must declare a non-empty \"images\" array");
  std::set<std::string> ids;
  for (const auto& ji : j.at("images")) {
    ManifestImage img;
    img.id   = ji.at("id").get<std::string>();
    img.path = ji.at("path").get<std::string>();
    if (!ids.insert(img.id).second)
      throw ManifestError("duplicate image id " + img.id);
    for (const auto& jo : ji.at("objects")) {
      ManifestObject obj;
      obj.name = jo.at("name").get<std::string>();
      if (jo.contains("mask") && !jo.at("mask").is_null())
        obj.mask_path = jo.at("mask").get<std::string>();
      if (jo.contains("color") && !jo.at("color").is_null())
        obj.color = jo.at("color").get<std::string>();
      if (jo.contains("material") && !jo.at("material").is_null())
        obj.material = jo.at("material").get<std::string>();
      img.objects.push_back(std::move(obj));
    }
    if (img.objects.empty())
      throw ManifestError("image " + img.id + " declares no objects");
    m.images.push_back(std::move(img));
  }
  return m;
}

std::vector<Scenario> generate_scenarios(const ImageManifest& manifest,
                                         const GenerateOptions& options) {
  if (manifest.images.empty()) throw ManifestError("manifest has no images");
  if (options.instances_per_cell < 1)
    throw RangeError("instances_per_cell must be >= 1");
  const AttributeDictionaries dicts = AttributeDictionaries::defaults();

  std::vector<Scenario> out;
  for (const auto& image : manifest.images) {
    for (const auto& edit_type : edit_types()) {
      for (int k : options.object_counts) {
        if (static_cast<int>(image.objects.size()) < k)
          throw ManifestError("image " + image.id + " declares " +
                              std::to_string(image.objects.size()) +
                              " objects; K=" + std::to_string(k) +
                              " scenarios need at least " + std::to_string(k));
        for (int inst = 1; inst <= options.instances_per_cell; ++inst) {
          Scenario sc;
          sc.image_id  = image.id;
          sc.edit_type = edit_type;
          sc.k         = k;
          sc.instance  = inst;
          {
            std::ostringstream id;
            id << image.id << '-' << slug(edit_type) << "-k" << k << "-i";
            id.fill('0');
            id.width(2);
            id << inst;
            sc.id = id.str();
          }
          sc.seed = fnv1a(sc.id, fnv1a_u64(options.seed));
          Rng rng(sc.seed);

          // K distinct objects, kept in manifest order so mask association
          // stays stable.
          std::vector<int> indices(image.objects.size());
          for (std::size_t i = 0; i < indices.size(); ++i)
            indices[i] = static_cast<int>(i);
          std::vector<int> chosen;
          for (int c = 0; c < k; ++c) {
            const std::size_t pick =
                static_cast<std::size_t>(rng.next_below(indices.size()));
            chosen.push_back(indices[pick]);
            indices.erase(indices.begin() + static_cast<long>(pick));
          }
          std::sort(chosen.begin(), chosen.end());

          std::set<std::string> used_colors, used_objects, used_materials;
          for (int idx : chosen) {
            const ManifestObject& mo = image.objects[static_cast<std::size_t>(idx)];
            ScenarioObject so;
            so.manifest_index = idx;
            so.name           = mo.name;
            so.source_prompt  = with_article(mo.name);

            const bool wants_color = edit_type == "color" ||
                                     edit_type == "color+object";
            const bool wants_object = edit_type == "object" ||
                                      edit_type == "color+object" ||
                                      edit_type == "object+material";
            const bool wants_material = edit_type == "material" ||
                                        edit_type == "object+material";
            if (wants_color)
              so.attributes.color = sample_attribute(rng, dicts.colors,
                                                     used_colors, mo.color,
                                                     "colors");
            if (wants_object) {
              used_objects.insert(mo.name);  // never rename to itself
              so.attributes.new_object = sample_attribute(
                  rng, dicts.objects, used_objects, std::nullopt, "objects");
            }
            if (wants_material)
              so.attributes.material =
                  sample_attribute(rng, dicts.materials, used_materials,
                                   mo.material, "materials");

            const std::string rendered =
                render_prompt(edit_type, mo.name, so.attributes);
            so.target_prompt = with_article(rendered);
            const std::string stripped =
                so.attributes.new_object ? *so.attributes.new_object : mo.name;
            so.stripped_prompt = with_article(stripped);
            sc.objects.push_back(std::move(so));
          }
          out.push_back(std::move(sc));
        }
      }
    }
  }
  return out;
}

std::string scenarios_to_json(const std::vector<Scenario>& scenarios) {
  json arr = json::array();
  for (const auto& sc : scenarios) {
    json j;
    j["id"]        = sc.id;
    j["image_id"]  = sc.image_id;
    j["edit_type"] = sc.edit_type;
    j["k"]         = sc.k;
    j["instance"]  = sc.instance;
    j["seed"]      = sc.seed;
    json objs      = json::array();
    for (const auto& so : sc.objects) {
      json o;
      o["manifest_index"]  = so.manifest_index;
      o["name"]            = so.name;
      o["source_prompt"]   = so.source_prompt;
      o["target_prompt"]   = so.target_prompt;
      o["stripped_prompt"] = so.stripped_prompt;
      o["attributes"]      = attrs_to_json(so.attributes);
      objs.push_back(std::move(o));
    }
    j["objects"] = std::move(objs);
    arr.push_back(std::move(j));
  }
  return arr.dump(2) + "\n";
}

std::vector<Scenario> scenarios_from_json(const std::string& json_text) {
  const json arr = json::parse(json_text);
  std::vector<Scenario> out;
  for (const auto& j : arr) {
    Scenario sc;
    sc.id        = j.at("id").get<std::string>();
    sc.image_id  = j.at("image_id").get<std::string>();
    sc.edit_type = j.at("edit_type").get<std::string>();
    sc.k         = j.at("k").get<int>();
    sc.instance  = j.at("instance").get<int>();
    sc.seed      = j.at("seed").get<std::uint64_t>();
    for (const auto& o : j.at("objects")) {
      ScenarioObject so;
      so.manifest_index  = o.at("manifest_index").get<int>();
      so.name            = o.at("name").get<std::string>();
      so.source_prompt   = o.at("source_prompt").get<std::string>();
      so.target_prompt   = o.at("target_prompt").get<std::string>();
      so.stripped_prompt = o.at("stripped_prompt").get<std::string>();
      so.attributes      = attrs_from_json(o.at("attributes"));
      sc.objects.push_back(std::move(so));
    }
    out.push_back(std::move(sc));
  }
  return out;
}

namespace {

const ManifestImage& image_for(const ImageManifest& manifest,
                               const std::string& image_id) {
  for (const auto& img : manifest.images)
    if (img.id == image_id) return img;
  throw ManifestError("scenario references unknown image " + image_id);
}

std::string resolve(const std::string& base, const std::string& path) {
  const fs::path p(path);
  if (p.is_absolute() || base.empty()) return path;
  return (fs::path(base) / p).string();
}

// One scenario end to end: edit, metrics, report JSON.
LeakageReport run_scenario(const Scenario& sc, const ImageManifest& manifest,
                           const BenchDeps& deps, const BenchOptions& options) {
  const ManifestImage& img = image_for(manifest, sc.image_id);

  EditRequest request;
  request.image = load_image_png(resolve(options.manifest_dir, img.path));
  for (std::size_t i = 0; i < sc.objects.size(); ++i) {
    ObjectPromptPair pair;
    pair.index    = static_cast<int>(i) + 1;
    pair.source   = sc.objects[i].source_prompt;
    pair.target   = sc.objects[i].target_prompt;
    pair.stripped = sc.objects[i].stripped_prompt;
    request.pairs.push_back(std::move(pair));
  }
  request.config           = options.edit;
  request.config.edit_type = sc.edit_type;
  request.config.seed      = sc.seed;
  request.config.schedule_fraction.reset();

  std::vector<std::string> mask_paths;
  for (const auto& so : sc.objects) {
    const ManifestObject& mo =
        img.objects.at(static_cast<std::size_t>(so.manifest_index));
    if (mo.mask_path.empty())
      throw ManifestError("object " + mo.name + " of image " + img.id +
                          " has no mask file; the benchmark runner needs "
                          "prepared masks");
    mask_paths.push_back(resolve(options.manifest_dir, mo.mask_path));
  }
  FileMaskProvider provider(mask_paths);

  const EditResult edited =
      run_edit(request, *deps.backend, *deps.encoder, provider);

  // Evaluation masks are the raw benchmark masks, disjointified but not
  // dilated; dilation is a pipeline concern.
  std::vector<MaskImage> eval_masks;
  for (const auto& p : mask_paths) eval_masks.push_back(load_mask_png(p));
  eval_masks = disjointify(eval_masks, {});

  std::vector<std::string> target_prompts;
  for (const auto& so : sc.objects) target_prompts.push_back(so.target_prompt);
  std::string joined;
  for (std::size_t i = 0; i < target_prompts.size(); ++i) {
    if (i) joined += " and ";
    joined += target_prompts[i];
  }

  LeakageReport report =
      compute_leakage_report(edited.image, request.image, eval_masks,
                             target_prompts, joined, *deps.scorer,
                             deps.adapters);
  report.scenario_id = sc.id;
  report.image_id    = sc.image_id;
  report.edit_type   = sc.edit_type;
  report.k           = sc.k;
  report.seed        = sc.seed;
  report.fallback    = edited.fallback;
  return report;
}

}  // namespace

BenchSummary run_benchmark(const std::vector<Scenario>& scenarios,
                           const ImageManifest& manifest,
                           const BenchDeps& deps, const BenchOptions& options) {
  if (!deps.backend || !deps.encoder || !deps.scorer)
    throw ValidationError("benchmark dependencies are incomplete");
  const fs::path out_dir(options.out_dir);
  const fs::path reports_dir = out_dir / "reports";
  fs::create_directories(reports_dir);

  BenchSummary summary;
  std::vector<std::pair<std::string, std::string>> failures;
  std::mutex io_mutex;  // serializes report writes and summary updates
  std::atomic<std::size_t> cursor{0};

  const int workers =
      std::max(1, std::min<int>(options.workers,
                                static_cast<int>(scenarios.size())));
  auto work = [&]() {
    for (;;) {
      const std::size_t i = cursor.fetch_add(1);
      if (i >= scenarios.size()) return;
      const Scenario& sc = scenarios[i];
      const fs::path report_path = reports_dir / (sc.id + ".json");

      if (options.resume && fs::exists(report_path)) {
        try {
          report_from_json(read_file(report_path.string()));
          std::lock_guard<std::mutex> lock(io_mutex);
          ++summary.skipped;
          continue;
        } catch (const std::exception&) {
          // Unreadable report: fall through and recompute it.
        }
      }

      try {
        const LeakageReport report =
            run_scenario(sc, manifest, deps, options);
        std::lock_guard<std::mutex> lock(io_mutex);
        write_file(report_path.string(), report_to_json(report));
        ++summary.completed;
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(io_mutex);
        failures.emplace_back(sc.id, e.what());
        ++summary.failed;
      }
    }
  };

  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < workers; ++t) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }

  {
    std::ostringstream csv;
    csv << "scenario_id,error\n";
    std::sort(failures.begin(), failures.end());
    for (const auto& [id, err] : failures) {
      std::string clean = err;
      std::replace(clean.begin(), clean.end(), '\n', ' ');
      std::replace(clean.begin(), clean.end(), ',', ';');
      csv << id << ',' << clean << '\n';
    }
    write_file((out_dir / "failures.csv").string(), csv.str());
  }

  if (summary.completed + summary.skipped > 0)
    write_aggregate(options.out_dir);
  return summary;
}

std::vector<LeakageReport> load_reports(const std::string& out_dir) {
  const fs::path reports_dir = fs::path(out_dir) / "reports";
  if (!fs::is_directory(reports_dir))
    throw IoError("no reports directory under " + out_dir);
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(reports_dir))
    if (entry.path().extension() == ".json") files.push_back(entry.path());
  std::sort(files.begin(), files.end());

  std::vector<LeakageReport> reports;
  for (const auto& f : files)
    reports.push_back(report_from_json(read_file(f.string())));
  return reports;
}

void write_aggregate(const std::string& out_dir) {
  const std::vector<LeakageReport> reports = load_reports(out_dir);
  if (reports.empty()) throw IoError("no reports to aggregate in " + out_dir);

  Accumulator all;
  std::map<std::string, Accumulator> by_type;
  std::map<int, Accumulator> by_k;
  for (const auto& r : reports) {
    all.add(r);
    by_type[r.edit_type].add(r);
    by_k[r.k].add(r);
  }

  std::ostringstream csv;
  csv << "group,count,tels,tils,editing_performance,psnr,ssim,mse,lpips,"
         "structure_distance\n";
  csv << all.row("all");
  for (const auto& t : edit_types())
    if (by_type.count(t)) csv << by_type[t].row("type:" + t);
  for (const auto& [k, acc] : by_k) csv << acc.row("k:" + std::to_string(k));
  write_file((fs::path(out_dir) / "aggregate.csv").string(), csv.str());
}

}  // namespace ale
