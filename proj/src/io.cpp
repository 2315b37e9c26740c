#include "fbdp/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace fbdp {

using nlohmann::json;

namespace {

MatX rows2_from_json(const json& j, const char* key, int expected_rows) {
    if (!j.contains(key) || !j.at(key).is_array())
        throw SchemaError(std::string("missing or non-array field \"") + key + "\"");
    const auto& arr = j.at(key);
    if (expected_rows >= 0 && static_cast<int>(arr.size()) != expected_rows) {
        std::ostringstream msg;
        msg << "field \"" << key << "\" has " << arr.size() << " rows, expected "
            << expected_rows;
        throw SchemaError(msg.str());
    }
    MatX out(arr.size(), 2);
    for (size_t r = 0; r < arr.size(); ++r) {
        const auto& row = arr[r];
        if (!row.is_array() || row.size() != 2)
            throw SchemaError(std::string("field \"") + key + "\" must hold [x,y] pairs");
        out(r, 0) = row[0].get<double>();
        out(r, 1) = row[1].get<double>();
    }
    return out;
}

json rows2_to_json(const MatX& m) {
    json arr = json::array();
    for (int r = 0; r < m.rows(); ++r)
        arr.push_back({m(r, 0), m(r, 1)});
    return arr;
}

json vec_to_json(const VecX& v) {
    json arr = json::array();
    for (int i = 0; i < v.size(); ++i)
        arr.push_back(v[i]);
    return arr;
}

double number_field(const json& j, const char* key) {
    if (!j.contains(key) || !j.at(key).is_number())
        throw SchemaError(std::string("missing or non-numeric field \"") + key + "\"");
    return j.at(key).get<double>();
}

} // namespace

std::string format_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open " + path + " for reading");
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad())
        throw IoError("read failure on " + path);
    return ss.str();
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw IoError("cannot open " + path + " for writing");
    out << content;
    out.flush();
    if (!out)
        throw IoError("write failure on " + path);
}

json load_json_file(const std::string& path) {
    const std::string text = read_text_file(path);
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw SchemaError(path + ": " + e.what());
    }
}

void write_json_file(const std::string& path, const json& j) {
    write_text_file(path, j.dump(2) + "\n");
}

json form_to_json(const DiscreteForm& f) {
    return json{{"degree", f.degree}, {"values", vec_to_json(f.values)}};
}

DiscreteForm form_from_json(const Mesh& mesh, const json& j) {
    DiscreteForm f;
    if (!j.contains("degree") || !j.at("degree").is_number_integer())
        throw SchemaError("form needs an integer \"degree\"");
    f.degree = j.at("degree").get<int>();
    if (f.degree < 0 || f.degree > 2)
        throw SchemaError("form degree must be 0, 1 or 2");
    if (!j.contains("values") || !j.at("values").is_array())
        throw SchemaError("form needs a \"values\" array");
    const auto& vals = j.at("values");
    const int expected = f.degree == 0   ? mesh.vertices
                         : f.degree == 1 ? mesh.edge_count()
                                         : mesh.triangle_count();
    if (static_cast<int>(vals.size()) != expected) {
        std::ostringstream msg;
        msg << "degree-" << f.degree << " form needs " << expected << " values, got "
            << vals.size();
        throw SchemaError(msg.str());
    }
    f.values.resize(expected);
    for (int i = 0; i < expected; ++i)
        f.values[i] = vals[i].get<double>();
    return f;
}

json phase_to_json(const PhasePoint& z) {
    return json{{"positions", rows2_to_json(z.emb.positions)},
                {"alpha", rows2_to_json(z.alpha)}};
}

PhasePoint phase_from_json(MeshPtr mesh, const json& j) {
    const MatX pos = rows2_from_json(j, "positions", mesh->vertices);
    const MatX alpha = rows2_from_json(j, "alpha", mesh->vertices);
    return new_phase_point({mesh, pos}, alpha);
}

json matrix_to_json(const MatX& a) {
    json data = json::array();
    for (int r = 0; r < a.rows(); ++r)
        for (int c = 0; c < a.cols(); ++c)
            data.push_back(a(r, c));
    return json{{"rows", a.rows()}, {"cols", a.cols()}, {"data", data}};
}

MatX matrix_from_json(const json& j) {
    const int rows = static_cast<int>(number_field(j, "rows"));
    const int cols = static_cast<int>(number_field(j, "cols"));
    if (rows < 0 || cols < 0 || !j.contains("data") || !j.at("data").is_array())
        throw SchemaError("matrix needs non-negative dims and a \"data\" array");
    const auto& data = j.at("data");
    if (static_cast<int>(data.size()) != rows * cols)
        throw SchemaError("matrix data length does not match rows*cols");
    MatX a(rows, cols);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c)
            a(r, c) = data[r * cols + c].get<double>();
    return a;
}

MatX vertex_field_from_json(const Mesh& mesh, const json& j, const char* key) {
    return rows2_from_json(j, key, mesh.vertices);
}

json report_to_json(const DualPairReport& r) {
    json checks = json::array();
    for (const auto& c : r.checks)
        checks.push_back({{"name", c.name},
                          {"residual", c.residual},
                          {"tol", c.tol},
                          {"pass", c.pass}});
    return json{{"label", r.label},
                {"dim_tangent", r.dim_tangent},
                {"dim_radical", r.dim_radical},
                {"dim_arena", r.dim_arena},
                {"dim_left_span", r.dim_left_span},
                {"dim_right_span", r.dim_right_span},
                {"dim_ker_left", r.dim_ker_left},
                {"dim_ker_right", r.dim_ker_right},
                {"dim_left_orth", r.dim_left_orth},
                {"dim_right_orth", r.dim_right_orth},
                {"defect_dim", r.defect_dim},
                {"checks", checks},
                {"pass", r.pass}};
}

std::string report_csv_header() {
    return "index,label,dim_tangent,dim_radical,dim_arena,dim_left_span,"
           "dim_right_span,dim_ker_left,dim_ker_right,dim_left_orth,"
           "dim_right_orth,defect_dim,worst_check,worst_residual,pass";
}

std::string report_csv_row(int index, const DualPairReport& r) {
    std::string worst_name = "none";
    double worst_ratio = -1.0, worst_res = 0.0;
    for (const auto& c : r.checks) {
        const double ratio = c.tol > 0 ? c.residual / c.tol : c.residual;
        if (ratio > worst_ratio) {
            worst_ratio = ratio;
            worst_name = c.name;
            worst_res = c.residual;
        }
    }
    std::ostringstream row;
    row << index << ',' << r.label << ',' << r.dim_tangent << ',' << r.dim_radical
        << ',' << r.dim_arena << ',' << r.dim_left_span << ',' << r.dim_right_span
        << ',' << r.dim_ker_left << ',' << r.dim_ker_right << ',' << r.dim_left_orth
        << ',' << r.dim_right_orth << ',' << r.defect_dim << ',' << worst_name << ','
        << format_double(worst_res) << ',' << (r.pass ? 1 : 0);
    return row.str();
}

json witness_to_json(const WitnessReport& w) {
    return json{{"witness_dalpha", rows2_to_json(w.witness.dalpha)},
                {"solve_residual", w.solve_residual},
                {"right_map_residual", w.right_map_residual},
                {"witness_norm", w.witness_norm},
                {"boundary_form_norm", w.boundary_form_norm},
                {"small_field_constant", w.small_field_constant},
                {"span_residual_fraction", w.span_residual_fraction},
                {"pass", w.pass}};
}

json split_to_json(const ConnectionSplit& s, const MatX& tangent_part, bool projected) {
    return json{{"projected", projected},
                {"w", rows2_to_json(unflatten(s.w.w))},
                {"tangent_part", rows2_to_json(tangent_part)},
                {"gradient_part", rows2_to_json(s.grad_part)},
                {"boundary_normal_speed", vec_to_json(s.boundary_normal_speed)},
                {"admissibility_residual", s.admissibility_residual}};
}

std::string trajectory_csv(const std::vector<TrajectoryRow>& rows) {
    std::ostringstream out;
    out << "time,energy,volume,perimeter,max|v|,jr_drift,vorticity_drift,"
           "pressure_at_centroid\n";
    for (const auto& r : rows)
        out << format_double(r.time) << ',' << format_double(r.energy) << ','
            << format_double(r.volume) << ',' << format_double(r.perimeter) << ','
            << format_double(r.max_speed) << ',' << format_double(r.jr_drift) << ','
            << format_double(r.vorticity_drift) << ','
            << format_double(r.pressure_at_centroid) << '\n';
    return out.str();
}

RunConfig runconfig_from_json(const json& j) {
    RunConfig cfg;
    if (!j.contains("mesh") || !j.at("mesh").is_string())
        throw SchemaError("run config needs a \"mesh\" path");
    cfg.mesh_path = j.at("mesh").get<std::string>();
    cfg.dt = number_field(j, "dt");
    if (!(cfg.dt > 0))
        throw SchemaError("run config needs dt > 0");
    if (!j.contains("steps") || !j.at("steps").is_number_integer())
        throw SchemaError("run config needs an integer \"steps\"");
    cfg.steps = j.at("steps").get<int>();
    if (cfg.steps < 0)
        throw SchemaError("run config needs steps >= 0");
    cfg.tau = j.contains("tau") ? number_field(j, "tau") : 0.0;
    if (j.contains("volume_correction")) {
        if (!j.at("volume_correction").is_boolean())
            throw SchemaError("\"volume_correction\" must be a boolean");
        cfg.volume_correction = j.at("volume_correction").get<bool>();
    }
    cfg.initial_velocity =
        j.contains("initial_velocity") ? j.at("initial_velocity") : json{{"kind", "zero"}};
    if (!cfg.initial_velocity.is_object())
        throw SchemaError("\"initial_velocity\" must be an object");
    return cfg;
}

MatX initial_velocity_field(const Mesh& mesh, const MatX& positions, const json& spec) {
    if (!spec.is_object() || !spec.contains("kind") || !spec.at("kind").is_string())
        throw SchemaError("initial velocity needs a \"kind\" string");
    const std::string kind = spec.at("kind").get<std::string>();
    MatX v = MatX::Zero(mesh.vertices, 2);
    if (kind == "zero")
        return v;
    if (kind == "rotation") {
        const double omega = number_field(spec, "omega");
        Vec2 center = Vec2::Zero();
        if (spec.contains("center")) {
            const auto& c = spec.at("center");
            if (!c.is_array() || c.size() != 2)
                throw SchemaError("rotation \"center\" must be [x,y]");
            center << c[0].get<double>(), c[1].get<double>();
        }
        for (int s = 0; s < mesh.vertices; ++s) {
            const Vec2 r = Vec2(positions.row(s)) - center;
            v(s, 0) = -omega * r.y();
            v(s, 1) = omega * r.x();
        }
        return v;
    }
    if (kind == "stream") {
        AlgebraElementM field;
        if (!spec.contains("family") || !spec.at("family").is_string())
            throw SchemaError("stream velocity needs a \"family\" string");
        const std::string fam = spec.at("family").get<std::string>();
        if (fam == "poly")
            field.family = AlgebraElementM::Family::poly;
        else if (fam == "trig")
            field.family = AlgebraElementM::Family::trig;
        else
            throw SchemaError("unknown stream family \"" + fam + "\"");
        field.a = static_cast<int>(number_field(spec, "a"));
        field.b = static_cast<int>(number_field(spec, "b"));
        if (field.a < 0 || field.b < 0)
            throw SchemaError("stream exponents must be non-negative");
        field.sin_x = spec.value("sin_x", false);
        field.sin_y = spec.value("sin_y", false);
        const double scale = spec.contains("scale") ? number_field(spec, "scale") : 1.0;
        for (int s = 0; s < mesh.vertices; ++s)
            v.row(s) = scale * field.velocity(positions.row(s)).transpose();
        return v;
    }
    throw SchemaError("unknown initial velocity kind \"" + kind + "\"");
}

std::string boundary_svg(const Mesh& mesh, const MatX& positions,
                         const std::string& caption) {
    double minx = positions.col(0).minCoeff(), maxx = positions.col(0).maxCoeff();
    double miny = positions.col(1).minCoeff(), maxy = positions.col(1).maxCoeff();
    const double span = std::max({maxx - minx, maxy - miny, 1e-12});
    const double pad = 0.05 * span;
    minx -= pad;
    miny -= pad;
    const double scale = 600.0 / (span + 2 * pad);
    auto px = [&](double x) { return 20.0 + scale * (x - minx); };
    auto py = [&](double y) { return 620.0 - scale * (y - miny); };

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"680\" "
           "viewBox=\"0 0 640 680\">\n"
        << "<rect width=\"640\" height=\"680\" fill=\"white\"/>\n";
    char buf[64];
    for (const auto& loop : mesh.boundary_loops) {
        svg << "<polygon fill=\"none\" stroke=\"black\" stroke-width=\"1.5\" points=\"";
        for (size_t k = 0; k < loop.size(); ++k) {
            std::snprintf(buf, sizeof(buf), "%.2f,%.2f", px(positions(loop[k], 0)),
                          py(positions(loop[k], 1)));
            svg << (k ? " " : "") << buf;
        }
        svg << "\"/>\n";
    }
    svg << "<text x=\"20\" y=\"665\" font-family=\"monospace\" font-size=\"14\">"
        << caption << "</text>\n</svg>\n";
    return svg.str();
}

} // namespace fbdp
