#include <CLI11.hpp>

#include <atomic>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <thread>

#include "freshlink/config.hpp"
#include "freshlink/leader.hpp"
#include "freshlink/log.hpp"
#include "freshlink/metrics.hpp"
#include "freshlink/sim.hpp"
#include "freshlink/transport.hpp"

namespace fl = freshlink;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

std::vector<std::size_t> parse_sweep(const std::string& spec) {
    // "n=2,4,8,14"
    auto eq = spec.find('=');
    if (eq == std::string::npos || spec.substr(0, eq) != "n")
        throw fl::ConfigError(0, "sweep", "expected --sweep n=<list>");
    std::vector<std::size_t> out;
    std::stringstream ss(spec.substr(eq + 1));
    std::string item;
    while (std::getline(ss, item, ','))
        out.push_back(std::stoul(item));
    if (out.empty())
        throw fl::ConfigError(0, "sweep", "empty sweep list");
    return out;
}

int cmd_sim(const std::string& config_path, const std::string& out_path,
            const std::string& sweep, std::size_t repeat, bool baseline) {
    fl::SimConfig base = fl::parse_config_file(config_path);
    std::vector<std::size_t> ns;
    if (!sweep.empty())
        ns = parse_sweep(sweep);
    else
        ns.push_back(base.n);

    std::vector<fl::MetricsReport> reports;
    for (std::size_t n : ns) {
        for (std::size_t rep = 0; rep < repeat; ++rep) {
            fl::SimConfig cfg = base;
            cfg.n = n;
            cfg.seed = base.seed + rep;
            if (!base.per_link_loss.empty() && base.per_link_loss.size() != n)
                cfg.per_link_loss.clear();  // sweeps override n; fall back to uniform loss
            if (!base.clock_offset_s.empty() && base.clock_offset_s.size() != n)
                cfg.clock_offset_s.clear();
            fl::MetricsReport report =
                baseline ? fl::run_random_access_baseline(cfg) : fl::run_polling_sim(cfg);
            reports.push_back(std::move(report));
        }
    }
    fl::write_metrics_csv(reports, out_path);
    std::cout << "wrote " << reports.size() << " run(s) to " << out_path << "\n";
    return kExitOk;
}

int cmd_leader(const std::string& bind_addr, const std::string& followers_path,
               const std::string& policy_name, long timeout_ms, std::size_t window,
               double sync_period_s, const std::string& metrics_path, double duration_s) {
    auto bind_ep = fl::parse_endpoint(bind_addr);
    if (!bind_ep) {
        std::cerr << "error: bad bind address '" << bind_addr << "'\n";
        return kExitConfig;
    }
    std::ifstream ff(followers_path);
    if (!ff) {
        std::cerr << "error: cannot open followers file '" << followers_path << "'\n";
        return kExitConfig;
    }
    std::vector<std::pair<std::uint16_t, fl::Endpoint>> follower_list;
    std::string line;
    int line_no = 0;
    while (std::getline(ff, line)) {
        ++line_no;
        std::stringstream ss(line);
        unsigned id;
        std::string addr;
        if (!(ss >> id >> addr)) {
            if (line.find_first_not_of(" \t\r") == std::string::npos)
                continue;
            std::cerr << "error: followers file line " << line_no << ": expected 'id address'\n";
            return kExitConfig;
        }
        auto ep = fl::parse_endpoint(addr);
        if (!ep || id == 0 || id > 65535) {
            std::cerr << "error: followers file line " << line_no << ": bad entry\n";
            return kExitConfig;
        }
        follower_list.emplace_back(static_cast<std::uint16_t>(id), *ep);
    }
    if (follower_list.empty()) {
        std::cerr << "error: no followers listed\n";
        return kExitConfig;
    }

    fl::LeaderConfig lcfg;
    lcfg.policy = fl::policy_from_string(policy_name);
    lcfg.timeout = fl::Duration::from_millis(timeout_ms);
    lcfg.window = window;
    lcfg.sync_period = fl::Duration::from_seconds(sync_period_s);

    fl::SystemClock clock;
    fl::UdpTransport transport(bind_ep->host, bind_ep->port, clock);
    fl::Leader leader(clock, transport, lcfg);
    for (const auto& [id, ep] : follower_list)
        leader.register_follower(id, ep);

    fl::Timestamp start = clock.now();
    fl::Timestamp end = start + fl::Duration::from_seconds(duration_s);
    leader.run_until(end);
    fl::Timestamp final_now = clock.now();
    leader.finish(final_now);

    fl::MetricsReport report;
    report.run_id = "leader";
    report.policy = policy_name;
    report.n = follower_list.size();
    report.rate_fps = 0.0;
    double integral_sum = 0, span_sum = 0, bytes_sum = 0;
    std::uint64_t deliveries_sum = 0;
    for (const auto& [id, entry] : leader.followers()) {
        const auto& totals = leader.metrics().totals(id);
        double span = (entry.trace.end() - entry.trace.start()).seconds();
        fl::MetricsRow row;
        row.follower_id = std::to_string(id);
        row.mean_aoi_s =
            span > 0 ? entry.trace.integrate(entry.trace.start(), entry.trace.end()) / span : 0;
        row.p95_aoi_s = entry.trace.percentile(0.95, fl::Duration::from_millis(1));
        row.throughput_bps = span > 0 ? static_cast<double>(totals.bytes) * 8.0 / span : 0;
        row.deliveries = totals.deliveries;
        report.rows.push_back(row);
        integral_sum += entry.trace.integrate(entry.trace.start(), entry.trace.end());
        span_sum += span;
        bytes_sum += static_cast<double>(totals.bytes);
        deliveries_sum += totals.deliveries;
    }
    fl::MetricsRow all;
    all.follower_id = "all";
    all.mean_aoi_s = span_sum > 0 ? integral_sum / span_sum : 0;
    all.p95_aoi_s = 0;
    std::vector<double> pool;
    for (const auto& [id, entry] : leader.followers())
        for (fl::Timestamp t = entry.trace.start(); t <= entry.trace.end();
             t = t + fl::Duration::from_millis(1))
            pool.push_back(entry.trace.age_at(t));
    if (!pool.empty()) {
        std::sort(pool.begin(), pool.end());
        auto idx = static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(pool.size())));
        all.p95_aoi_s = pool[std::min(std::max<std::size_t>(idx, 1), pool.size()) - 1];
    }
    all.throughput_bps = span_sum > 0 ? bytes_sum * 8.0 * static_cast<double>(report.n) / span_sum
                                      : 0;
    all.deliveries = deliveries_sum;
    report.rows.push_back(all);
    report.polls = leader.stats().polls;
    report.responses = leader.stats().responses;
    report.timeouts = leader.stats().timeouts;
    fl::write_metrics_csv(report, metrics_path);

    const auto& stats = leader.stats();
    std::cout << "polls=" << stats.polls << " responses=" << stats.responses
              << " timeouts=" << stats.timeouts << " late_fragments=" << stats.late_fragments
              << " sync_failures=" << stats.sync_failures << "\n";
    return kExitOk;
}

int cmd_follower(unsigned id, const std::string& bind_addr, double rate_fps,
                 std::size_t payload_bytes, const std::string& queue_kind, double fifo_rate_fps,
                 std::size_t capacity, std::size_t max_payload, double duration_s) {
    auto bind_ep = fl::parse_endpoint(bind_addr);
    if (!bind_ep || id == 0 || id > 65535) {
        std::cerr << "error: bad follower id or bind address\n";
        return kExitConfig;
    }
    fl::FollowerConfig fcfg;
    if (queue_kind == "lifo") {
        fcfg.queue = fl::QueueDiscipline::Lifo1;
    } else if (queue_kind == "fifo") {
        fcfg.queue = fl::QueueDiscipline::FifoRc;
        fcfg.fifo_interval = fifo_rate_fps > 0
                                 ? fl::Duration::from_seconds(1.0 / fifo_rate_fps)
                                 : fl::Duration{};
    } else {
        std::cerr << "error: --queue must be lifo or fifo\n";
        return kExitConfig;
    }
    fcfg.fifo_capacity = capacity;
    fcfg.max_payload = max_payload;

    fl::SystemClock clock;
    fl::UdpTransport transport(bind_ep->host, bind_ep->port, clock);
    fl::FollowerMiddleware mw(static_cast<std::uint16_t>(id), fcfg);

    std::atomic<bool> stop{false};
    std::thread generator([&] {
        auto interval = std::chrono::duration<double>(1.0 / rate_fps);
        auto next = std::chrono::steady_clock::now();
        fl::SystemClock gen_clock;
        while (!stop.load()) {
            next += std::chrono::duration_cast<std::chrono::steady_clock::duration>(interval);
            std::this_thread::sleep_until(next);
            fl::Timestamp now = gen_clock.now();
            mw.offer_update(std::vector<std::uint8_t>(payload_bytes, 0), now, now);
        }
    });

    fl::Timestamp end = clock.now() + fl::Duration::from_seconds(duration_s);
    while (duration_s <= 0 || clock.now() < end) {
        auto dg = transport.recv(clock.now() + fl::Duration::from_millis(200));
        if (!dg)
            continue;
        auto decoded = fl::wire::decode(dg->bytes);
        auto* packet = std::get_if<fl::wire::Packet>(&decoded);
        if (packet == nullptr)
            continue;
        fl::Timestamp now = clock.now();
        if (const auto* poll = std::get_if<fl::wire::PollPacket>(&packet->body)) {
            auto frag = mw.handle_poll(*poll, now);
            if (frag) {
                auto bytes = fl::wire::encode(
                    fl::wire::Packet{static_cast<std::uint16_t>(id), *frag});
                transport.send(dg->from, bytes);
            }
        } else if (const auto* req = std::get_if<fl::wire::SyncReqPacket>(&packet->body)) {
            auto resp = mw.handle_sync(*req, clock.now());
            auto bytes =
                fl::wire::encode(fl::wire::Packet{static_cast<std::uint16_t>(id), resp});
            transport.send(dg->from, bytes);
        }
    }
    stop.store(true);
    generator.join();
    return kExitOk;
}

struct SeriesKey {
    std::string policy;
    double x;
    bool operator<(const SeriesKey& o) const {
        return policy != o.policy ? policy < o.policy : x < o.x;
    }
};

int cmd_report(const std::string& in_path, const std::string& out_path,
               const std::string& svg_path) {
    auto rows = fl::read_metrics_csv(in_path);
    // Aggregate rows only; average the mean AoI over repeats.
    std::map<SeriesKey, std::pair<double, std::size_t>> by_n, by_rate;
    for (const auto& row : rows) {
        if (row.follower_id != "all")
            continue;
        auto& n_acc = by_n[{row.policy, static_cast<double>(row.n)}];
        n_acc.first += row.mean_aoi_s;
        n_acc.second += 1;
        auto& r_acc = by_rate[{row.policy, row.rate_fps}];
        r_acc.first += row.mean_aoi_s;
        r_acc.second += 1;
    }
    if (by_n.empty())
        throw std::runtime_error("no aggregate rows in " + in_path);

    std::ostringstream out;
    out << "mean AoI (s) vs N, per policy\n";
    out << "policy        n         mean_aoi_s\n";
    std::map<double, std::map<std::string, double>> pivot;
    for (const auto& [key, acc] : by_n) {
        double mean = acc.first / static_cast<double>(acc.second);
        out << key.policy;
        for (std::size_t i = key.policy.size(); i < 14; ++i) out << ' ';
        std::string n_str = std::to_string(static_cast<long>(key.x));
        out << n_str;
        for (std::size_t i = n_str.size(); i < 10; ++i) out << ' ';
        out << mean << "\n";
        pivot[key.x][key.policy] = mean;
    }
    // ratio column when a baseline series accompanies a middleware policy
    bool have_baseline = false;
    for (const auto& [x, series] : pivot)
        if (series.count("baseline"))
            have_baseline = true;
    if (have_baseline) {
        out << "\nratio (baseline / middleware) per N\n";
        out << "n         policy        ratio\n";
        for (const auto& [x, series] : pivot) {
            auto bl = series.find("baseline");
            if (bl == series.end())
                continue;
            for (const auto& [policy, mean] : series) {
                if (policy == "baseline" || mean <= 0)
                    continue;
                std::string n_str = std::to_string(static_cast<long>(x));
                out << n_str;
                for (std::size_t i = n_str.size(); i < 10; ++i) out << ' ';
                out << policy;
                for (std::size_t i = policy.size(); i < 14; ++i) out << ' ';
                out << bl->second / mean << "\n";
            }
        }
    }
    out << "\nmean AoI (s) vs rate (fps), per policy\n";
    out << "policy        rate_fps  mean_aoi_s\n";
    for (const auto& [key, acc] : by_rate) {
        out << key.policy;
        for (std::size_t i = key.policy.size(); i < 14; ++i) out << ' ';
        std::ostringstream xs;
        xs << key.x;
        out << xs.str();
        for (std::size_t i = xs.str().size(); i < 10; ++i) out << ' ';
        out << acc.first / static_cast<double>(acc.second) << "\n";
    }

    std::ofstream of(out_path, std::ios::binary);
    if (!of)
        throw std::runtime_error("cannot open for writing: " + out_path);
    of << out.str();
    std::cout << out.str();

    if (!svg_path.empty()) {
        // minimal line plot: mean AoI vs N, one polyline per policy
        double max_x = 1, max_y = 1e-9;
        std::map<std::string, std::vector<std::pair<double, double>>> series;
        for (const auto& [key, acc] : by_n) {
            double mean = acc.first / static_cast<double>(acc.second);
            series[key.policy].emplace_back(key.x, mean);
            max_x = std::max(max_x, key.x);
            max_y = std::max(max_y, mean);
        }
        const double w = 640, h = 420, m = 50;
        std::ofstream svg(svg_path, std::ios::binary);
        if (!svg)
            throw std::runtime_error("cannot open for writing: " + svg_path);
        svg << "<svg xmlns='http://www.w3.org/2000/svg' width='" << w << "' height='" << h
            << "'>\n<rect width='100%' height='100%' fill='white'/>\n";
        const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};
        int ci = 0;
        double label_y = 20;
        for (const auto& [policy, pts] : series) {
            std::ostringstream poly;
            for (const auto& [x, y] : pts) {
                double px = m + (w - 2 * m) * x / max_x;
                double py = h - m - (h - 2 * m) * y / max_y;
                poly << px << "," << py << " ";
            }
            const char* color = colors[ci++ % 5];
            svg << "<polyline fill='none' stroke='" << color << "' stroke-width='2' points='"
                << poly.str() << "'/>\n";
            svg << "<text x='" << w - m - 120 << "' y='" << label_y << "' fill='" << color
                << "' font-size='13'>" << policy << "</text>\n";
            label_y += 16;
        }
        svg << "<line x1='" << m << "' y1='" << h - m << "' x2='" << w - m << "' y2='" << h - m
            << "' stroke='black'/>\n<line x1='" << m << "' y1='" << m << "' x2='" << m
            << "' y2='" << h - m << "' stroke='black'/>\n</svg>\n";
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"freshness-first polling middleware and simulator"};
    app.require_subcommand(1);

    // sim
    std::string sim_config, sim_out = "metrics.csv", sim_sweep;
    std::size_t sim_repeat = 1;
    bool sim_baseline = false;
    auto* sim = app.add_subcommand("sim", "run a simulation (or a sweep)");
    sim->add_option("--config", sim_config, "config file")->required();
    sim->add_option("--out", sim_out, "output metrics CSV");
    sim->add_option("--sweep", sim_sweep, "sweep spec, e.g. n=2,4,8,14");
    sim->add_option("--repeat", sim_repeat, "runs per sweep point (seeds seed..seed+r-1)");
    sim->add_flag("--baseline", sim_baseline, "run the random-access baseline");

    // leader
    std::string l_bind = "0.0.0.0:0", l_followers, l_policy = "whittle",
                l_metrics = "leader_metrics.csv";
    long l_timeout_ms = 300;
    std::size_t l_window = 10;
    double l_sync_period = 120, l_duration = 30;
    auto* leader = app.add_subcommand("leader", "run a polling leader over UDP");
    leader->add_option("--bind", l_bind, "bind address host:port");
    leader->add_option("--followers", l_followers, "followers file: one 'id address' per line")
        ->required();
    leader->add_option("--policy", l_policy, "whittle|maxage|roundrobin|random");
    leader->add_option("--timeout-ms", l_timeout_ms, "poll response timeout");
    leader->add_option("--window", l_window, "link estimator window W");
    leader->add_option("--sync-period-s", l_sync_period, "clock sync period");
    leader->add_option("--metrics", l_metrics, "output metrics CSV");
    leader->add_option("--duration-s", l_duration, "run duration in seconds");

    // follower
    unsigned f_id = 1;
    std::string f_bind = "0.0.0.0:0", f_queue = "lifo";
    double f_rate = 30, f_fifo_rate = 0, f_duration = 0;
    std::size_t f_payload = 25000, f_capacity = 16, f_max_payload = 1400;
    auto* follower = app.add_subcommand("follower", "run a follower responder over UDP");
    follower->add_option("--id", f_id, "follower id (nonzero)")->required();
    follower->add_option("--bind", f_bind, "bind address host:port")->required();
    follower->add_option("--rate-fps", f_rate, "synthetic update generation rate");
    follower->add_option("--payload-bytes", f_payload, "synthetic update size");
    follower->add_option("--queue", f_queue, "lifo|fifo");
    follower->add_option("--fifo-rate-fps", f_fifo_rate,
                         "FIFO admission rate (interval = 1/rate; 0 = uncontrolled)");
    follower->add_option("--capacity", f_capacity, "FIFO capacity");
    follower->add_option("--max-payload", f_max_payload, "fragment payload limit");
    follower->add_option("--duration-s", f_duration, "run duration (0 = forever)");

    // report
    std::string r_in, r_out = "report.txt", r_svg;
    auto* report = app.add_subcommand("report", "summarize a metrics CSV");
    report->add_option("--in", r_in, "input metrics CSV")->required();
    report->add_option("--out", r_out, "output text report");
    report->add_option("--svg", r_svg, "optional SVG line plot");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (sim->parsed())
            return cmd_sim(sim_config, sim_out, sim_sweep, sim_repeat, sim_baseline);
        if (leader->parsed())
            return cmd_leader(l_bind, l_followers, l_policy, l_timeout_ms, l_window,
                              l_sync_period, l_metrics, l_duration);
        if (follower->parsed())
            return cmd_follower(f_id, f_bind, f_rate, f_payload, f_queue, f_fifo_rate,
                                f_capacity, f_max_payload, f_duration);
        if (report->parsed())
            return cmd_report(r_in, r_out, r_svg);
    } catch (const fl::ConfigError& e) {
        std::cerr << "error: config: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: config: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitOk;
}
