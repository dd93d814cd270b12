use std::fmt::Write as _;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::CompanyGraph;
use crate::csvio::fmt_f64;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExportFormat {
    #[default]
    Gexf,
    Graphml,
    Dot,
    EdgeCsv,
}

impl ExportFormat {
    pub fn extension(self) -> &'static str {
        match self {
            ExportFormat::Gexf => "gexf",
            ExportFormat::Graphml => "graphml",
            ExportFormat::Dot => "dot",
            ExportFormat::EdgeCsv => "csv",
        }
    }
}

impl FromStr for ExportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gexf" => Ok(ExportFormat::Gexf),
            "graphml" => Ok(ExportFormat::Graphml),
            "dot" => Ok(ExportFormat::Dot),
            "edge-csv" | "csv" => Ok(ExportFormat::EdgeCsv),
            other => Err(Error::InvalidArgument(format!(
                "format must be gexf, graphml, dot or edge-csv, got '{other}'"
            ))),
        }
    }
}

impl std::fmt::Display for ExportFormat {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ExportFormat::Gexf => "gexf",
            ExportFormat::Graphml => "graphml",
            ExportFormat::Dot => "dot",
            ExportFormat::EdgeCsv => "edge-csv",
        })
    }
}

/// Writes the graph in `format`. Nodes appear in lexicographic order and
/// edges by (lower, higher) ticker, so output is byte-stable.
///
/// GEXF, GraphML and DOT carry weights rounded to 6 decimals. The edge CSV
/// keeps full precision so it can be read back into an identical graph.
pub fn export_graph<W: Write>(graph: &CompanyGraph, format: ExportFormat, mut out: W) -> Result<()> {
    let text = match format {
        ExportFormat::Gexf => gexf(graph),
        ExportFormat::Graphml => graphml(graph),
        ExportFormat::Dot => dot(graph),
        ExportFormat::EdgeCsv => edge_csv(graph)?,
    };
    out.write_all(text.as_bytes())
        .map_err(|e| Error::io("<export>", e))
}

fn weight6(w: f64) -> String {
    format!("{w:.6}")
}

fn xml_escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

fn gexf(graph: &CompanyGraph) -> String {
    let keys = graph.attribute_keys();
    let mut s = String::new();
    s.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    s.push_str(
        "<gexf xmlns=\"http://www.gexf.net/1.2draft\" \
         xmlns:xsi=\"http://www.w3.org/2001/XMLSchema-instance\" \
         xsi:schemaLocation=\"http://www.gexf.net/1.2draft http://www.gexf.net/1.2draft/gexf.xsd\" \
         version=\"1.2\">\n",
    );
    s.push_str("  <meta>\n    <creator>stocknet</creator>\n");
    let _ = writeln!(
        s,
        "    <description>correlation network, edges with rho &gt; {}</description>",
        fmt_f64(graph.threshold())
    );
    s.push_str("  </meta>\n");
    s.push_str("  <graph mode=\"static\" defaultedgetype=\"undirected\">\n");
    if !keys.is_empty() {
        s.push_str("    <attributes class=\"node\" mode=\"static\">\n");
        for (i, key) in keys.iter().enumerate() {
            let _ = writeln!(
                s,
                "      <attribute id=\"{i}\" title=\"{}\" type=\"string\"/>",
                xml_escape(key)
            );
        }
        s.push_str("    </attributes>\n");
    }
    let _ = writeln!(s, "    <nodes count=\"{}\">", graph.node_count());
    for (i, name) in graph.nodes().iter().enumerate() {
        let id = xml_escape(name);
        let attrs = graph.attributes(i);
        if attrs.is_empty() {
            let _ = writeln!(s, "      <node id=\"{id}\" label=\"{id}\"/>");
        } else {
            let _ = writeln!(s, "      <node id=\"{id}\" label=\"{id}\">");
            s.push_str("        <attvalues>\n");
            for (k, key) in keys.iter().enumerate() {
                if let Some(v) = attrs.get(key) {
                    let _ = writeln!(
                        s,
                        "          <attvalue for=\"{k}\" value=\"{}\"/>",
                        xml_escape(v)
                    );
                }
            }
            s.push_str("        </attvalues>\n      </node>\n");
        }
    }
    s.push_str("    </nodes>\n");
    let _ = writeln!(s, "    <edges count=\"{}\">", graph.edge_count());
    for (i, (a, b, w)) in graph.edge_triples().into_iter().enumerate() {
        let _ = writeln!(
            s,
            "      <edge id=\"{i}\" source=\"{}\" target=\"{}\" weight=\"{}\"/>",
            xml_escape(a),
            xml_escape(b),
            weight6(w)
        );
    }
    s.push_str("    </edges>\n  </graph>\n</gexf>\n");
    s
}

fn graphml(graph: &CompanyGraph) -> String {
    let keys = graph.attribute_keys();
    let mut s = String::new();
    s.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    s.push_str(
        "<graphml xmlns=\"http://graphml.graphdrawing.org/xmlns\" \
         xmlns:xsi=\"http://www.w3.org/2001/XMLSchema-instance\" \
         xsi:schemaLocation=\"http://graphml.graphdrawing.org/xmlns \
         http://graphml.graphdrawing.org/xmlns/1.0/graphml.xsd\">\n",
    );
    for (i, key) in keys.iter().enumerate() {
        let _ = writeln!(
            s,
            "  <key id=\"n{i}\" for=\"node\" attr.name=\"{}\" attr.type=\"string\"/>",
            xml_escape(key)
        );
    }
    s.push_str("  <key id=\"weight\" for=\"edge\" attr.name=\"weight\" attr.type=\"double\"/>\n");
    s.push_str("  <graph id=\"G\" edgedefault=\"undirected\">\n");
    for (i, name) in graph.nodes().iter().enumerate() {
        let attrs = graph.attributes(i);
        if attrs.is_empty() {
            let _ = writeln!(s, "    <node id=\"{}\"/>", xml_escape(name));
        } else {
            let _ = writeln!(s, "    <node id=\"{}\">", xml_escape(name));
            for (k, key) in keys.iter().enumerate() {
                if let Some(v) = attrs.get(key) {
                    let _ = writeln!(s, "      <data key=\"n{k}\">{}</data>", xml_escape(v));
                }
            }
            s.push_str("    </node>\n");
        }
    }
    for (i, (a, b, w)) in graph.edge_triples().into_iter().enumerate() {
        let _ = writeln!(
            s,
            "    <edge id=\"e{i}\" source=\"{}\" target=\"{}\">\n      <data key=\"weight\">{}</data>\n    </edge>",
            xml_escape(a),
            xml_escape(b),
            weight6(w)
        );
    }
    s.push_str("  </graph>\n</graphml>\n");
    s
}

fn dot_quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

fn dot(graph: &CompanyGraph) -> String {
    let mut s = String::from("graph stocknet {\n");
    for (i, name) in graph.nodes().iter().enumerate() {
        let attrs = graph.attributes(i);
        if attrs.is_empty() {
            let _ = writeln!(s, "  {};", dot_quote(name));
        } else {
            let list: Vec<String> = attrs
                .iter()
                .map(|(k, v)| format!("{}={}", dot_quote(k), dot_quote(v)))
                .collect();
            let _ = writeln!(s, "  {} [{}];", dot_quote(name), list.join(", "));
        }
    }
    for (a, b, w) in graph.edge_triples() {
        let _ = writeln!(
            s,
            "  {} -- {} [weight={}];",
            dot_quote(a),
            dot_quote(b),
            weight6(w)
        );
    }
    s.push_str("}\n");
    s
}

fn edge_csv(graph: &CompanyGraph) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["ticker_a", "ticker_b", "rho"])
        .map_err(|e| Error::csv(e, None))?;
    for (a, b, rho) in graph.edge_triples() {
        w.write_record([a, b, &fmt_f64(rho)])
            .map_err(|e| Error::csv(e, None))?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::Internal(format!("edge csv buffer: {e}")))?;
    String::from_utf8(bytes).map_err(|e| Error::Internal(e.to_string()))
}
