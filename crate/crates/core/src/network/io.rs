//! Edge-list CSV, GraphML and DOT serialization.
//!
//! The edge list has the header `from,to,weight`. Nodes without edges are
//! written as `label,,` rows so that a re-import restores them. GraphML
//! carries the category annotation as a node attribute named `category`.

use std::collections::HashMap;
use std::fmt;
use std::io::{BufRead, BufReader, Read, Write};
use std::str::FromStr;

use quick_xml::events::Event;
use quick_xml::Reader;

use super::{NetworkBuilder, NetworkError, TransferNetwork};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    GraphMl,
    Dot,
    EdgeListCsv,
}

impl Format {
    /// Guesses the format from a file extension.
    pub fn from_path(path: &std::path::Path) -> Option<Format> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "graphml" | "xml" => Some(Format::GraphMl),
            "dot" | "gv" => Some(Format::Dot),
            "csv" => Some(Format::EdgeListCsv),
            _ => None,
        }
    }
}

impl FromStr for Format {
    type Err = NetworkError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "graphml" => Ok(Format::GraphMl),
            "dot" => Ok(Format::Dot),
            "csv" | "edgelist" | "edge-list" => Ok(Format::EdgeListCsv),
            other => Err(NetworkError::UnsupportedFormat(other.to_string())),
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::GraphMl => "graphml",
            Format::Dot => "dot",
            Format::EdgeListCsv => "csv",
        })
    }
}

pub fn export<W: Write>(net: &TransferNetwork, format: Format, out: W) -> Result<(), NetworkError> {
    match format {
        Format::EdgeListCsv => write_edge_list(net, out),
        Format::GraphMl => write_graphml(net, out),
        Format::Dot => write_dot(net, out),
    }
}

/// Reads a network. `directed` applies to the edge list, which does not
/// record direction; GraphML uses its own `edgedefault`.
pub fn import<R: Read>(
    input: R,
    format: Format,
    directed: bool,
) -> Result<TransferNetwork, NetworkError> {
    match format {
        Format::EdgeListCsv => read_edge_list(input, directed),
        Format::GraphMl => read_graphml(input),
        Format::Dot => Err(NetworkError::UnsupportedFormat(
            "dot (export only)".to_string(),
        )),
    }
}

fn csv_err(e: csv::Error) -> NetworkError {
    NetworkError::Parse {
        format: "edge-list",
        message: e.to_string(),
    }
}

fn write_edge_list<W: Write>(net: &TransferNetwork, out: W) -> Result<(), NetworkError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["from", "to", "weight"]).map_err(csv_err)?;
    for e in net.edges() {
        w.write_record([
            net.label(e.source),
            net.label(e.target),
            &e.weight.to_string(),
        ])
        .map_err(csv_err)?;
    }
    for (i, label) in net.labels().iter().enumerate() {
        if net.out_neighbors(i).is_empty() && net.in_neighbors(i).is_empty() {
            w.write_record([label.as_str(), "", ""]).map_err(csv_err)?;
        }
    }
    w.flush()?;
    Ok(())
}

fn read_edge_list<R: Read>(input: R, directed: bool) -> Result<TransferNetwork, NetworkError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(input);
    let headers = reader.headers().map_err(csv_err)?.clone();
    let expected = ["from", "to", "weight"];
    if headers.len() < 3 || !expected.iter().zip(headers.iter()).all(|(a, b)| *a == b) {
        return Err(NetworkError::Parse {
            format: "edge-list",
            message: format!("expected header from,to,weight, found {:?}", headers),
        });
    }
    let mut builder = NetworkBuilder::new(directed);
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(csv_err)?;
        let from = record.get(0).unwrap_or("");
        let to = record.get(1).unwrap_or("");
        let weight = record.get(2).unwrap_or("");
        if from.is_empty() {
            return Err(NetworkError::Parse {
                format: "edge-list",
                message: format!("row {}: empty source label", row + 1),
            });
        }
        if to.is_empty() {
            builder.add_node(from);
            continue;
        }
        let weight: u64 = weight.parse().map_err(|_| NetworkError::Parse {
            format: "edge-list",
            message: format!("row {}: invalid weight {:?}", row + 1, weight),
        })?;
        builder.add_transfer(from, to, weight);
    }
    builder.build()
}

fn xml_escape(s: &str) -> std::borrow::Cow<'_, str> {
    quick_xml::escape::escape(s)
}

fn write_graphml<W: Write>(net: &TransferNetwork, mut out: W) -> Result<(), NetworkError> {
    writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#)?;
    writeln!(
        out,
        r#"<graphml xmlns="http://graphml.graphdrawing.org/xmlns" xmlns:xsi="http://www.w3.org/2001/XMLSchema-instance" xsi:schemaLocation="http://graphml.graphdrawing.org/xmlns http://graphml.graphdrawing.org/xmlns/1.0/graphml.xsd">"#
    )?;
    writeln!(
        out,
        r#"  <key id="category" for="node" attr.name="category" attr.type="string"/>"#
    )?;
    writeln!(
        out,
        r#"  <key id="weight" for="edge" attr.name="weight" attr.type="long"/>"#
    )?;
    let default = if net.is_directed() { "directed" } else { "undirected" };
    writeln!(out, r#"  <graph id="transfers" edgedefault="{default}">"#)?;
    for label in net.labels() {
        match net.categories().get(label) {
            Some(cat) => writeln!(
                out,
                r#"    <node id="{}"><data key="category">{}</data></node>"#,
                xml_escape(label),
                xml_escape(cat)
            )?,
            None => writeln!(out, r#"    <node id="{}"/>"#, xml_escape(label))?,
        }
    }
    for e in net.edges() {
        writeln!(
            out,
            r#"    <edge source="{}" target="{}"><data key="weight">{}</data></edge>"#,
            xml_escape(net.label(e.source)),
            xml_escape(net.label(e.target)),
            e.weight
        )?;
    }
    writeln!(out, "  </graph>")?;
    writeln!(out, "</graphml>")?;
    Ok(())
}

fn xml_err(message: impl fmt::Display) -> NetworkError {
    NetworkError::Parse {
        format: "graphml",
        message: message.to_string(),
    }
}

enum Pending {
    Node(String),
    Edge { source: String, target: String },
}

fn read_graphml<R: Read>(input: R) -> Result<TransferNetwork, NetworkError> {
    let mut reader = Reader::from_reader(BufReader::new(input));
    read_graphml_events(&mut reader)
}

fn attr(
    e: &quick_xml::events::BytesStart<'_>,
    name: &[u8],
) -> Result<Option<String>, NetworkError> {
    for a in e.attributes() {
        let a = a.map_err(xml_err)?;
        if a.key.as_ref() == name {
            return Ok(Some(a.unescape_value().map_err(xml_err)?.into_owned()));
        }
    }
    Ok(None)
}

fn read_graphml_events<B: BufRead>(reader: &mut Reader<B>) -> Result<TransferNetwork, NetworkError> {
    let mut buf = Vec::new();
    // key id -> attr.name
    let mut keys: HashMap<String, String> = HashMap::new();
    let mut directed = true;
    let mut nodes: Vec<String> = Vec::new();
    let mut categories: Vec<(String, String)> = Vec::new();
    let mut edges: Vec<(String, String, Option<String>)> = Vec::new();
    let mut pending: Option<Pending> = None;
    let mut data_key: Option<String> = None;
    let mut data_text = String::new();
    let mut edge_weight: Option<String> = None;

    loop {
        let event = reader.read_event_into(&mut buf).map_err(xml_err)?;
        match event {
            Event::Start(ref e) | Event::Empty(ref e) => {
                let empty = matches!(event, Event::Empty(_));
                match e.local_name().as_ref() {
                    b"key" => {
                        if let (Some(id), Some(name)) = (attr(e, b"id")?, attr(e, b"attr.name")?) {
                            keys.insert(id, name);
                        }
                    }
                    b"graph" => {
                        if let Some(d) = attr(e, b"edgedefault")? {
                            directed = d != "undirected";
                        }
                    }
                    b"node" => {
                        let id = attr(e, b"id")?.ok_or_else(|| xml_err("node without id"))?;
                        nodes.push(id.clone());
                        if !empty {
                            pending = Some(Pending::Node(id));
                        }
                    }
                    b"edge" => {
                        let source =
                            attr(e, b"source")?.ok_or_else(|| xml_err("edge without source"))?;
                        let target =
                            attr(e, b"target")?.ok_or_else(|| xml_err("edge without target"))?;
                        if empty {
                            edges.push((source, target, None));
                        } else {
                            edge_weight = None;
                            pending = Some(Pending::Edge { source, target });
                        }
                    }
                    b"data" if !empty => {
                        data_key = attr(e, b"key")?;
                        data_text.clear();
                    }
                    _ => {}
                }
            }
            Event::Text(t) => {
                if data_key.is_some() {
                    data_text.push_str(&t.unescape().map_err(xml_err)?);
                }
            }
            Event::End(ref e) => match e.local_name().as_ref() {
                b"data" => {
                    if let Some(key) = data_key.take() {
                        let name = keys.get(&key).cloned().unwrap_or(key);
                        match (&pending, name.as_str()) {
                            (Some(Pending::Node(id)), "category") => {
                                categories.push((id.clone(), data_text.trim().to_string()))
                            }
                            (Some(Pending::Edge { .. }), "weight") => {
                                edge_weight = Some(data_text.trim().to_string())
                            }
                            _ => {}
                        }
                    }
                }
                b"node" => pending = None,
                b"edge" => {
                    if let Some(Pending::Edge { source, target }) = pending.take() {
                        edges.push((source, target, edge_weight.take()));
                    }
                }
                _ => {}
            },
            Event::Eof => break,
            _ => {}
        }
        buf.clear();
    }

    let mut builder = NetworkBuilder::new(directed);
    for n in nodes {
        builder.add_node(n);
    }
    for (source, target, weight) in edges {
        let weight = match weight {
            Some(w) => w
                .parse::<u64>()
                .map_err(|_| xml_err(format!("invalid weight {w:?}")))?,
            None => 1,
        };
        builder.add_transfer(&source, &target, weight);
    }
    for (node, cat) in categories {
        builder.set_category(&node, cat);
    }
    builder.build()
}

fn dot_quote(s: &str) -> String {
    let mut q = String::with_capacity(s.len() + 2);
    q.push('"');
    for c in s.chars() {
        match c {
            '"' => q.push_str("\\\""),
            '\\' => q.push_str("\\\\"),
            '\n' => q.push_str("\\n"),
            c => q.push(c),
        }
    }
    q.push('"');
    q
}

fn write_dot<W: Write>(net: &TransferNetwork, mut out: W) -> Result<(), NetworkError> {
    let (kind, arrow) = if net.is_directed() {
        ("digraph", "->")
    } else {
        ("graph", "--")
    };
    writeln!(out, "{kind} transfers {{")?;
    for label in net.labels() {
        match net.categories().get(label) {
            Some(cat) => writeln!(out, "  {} [category={}];", dot_quote(label), dot_quote(cat))?,
            None => writeln!(out, "  {};", dot_quote(label))?,
        }
    }
    for e in net.edges() {
        writeln!(
            out,
            "  {} {arrow} {} [weight={}];",
            dot_quote(net.label(e.source)),
            dot_quote(net.label(e.target)),
            e.weight
        )?;
    }
    writeln!(out, "}}")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn to_string(net: &TransferNetwork, format: Format) -> String {
        let mut buf = Vec::new();
        export(net, format, &mut buf).unwrap();
        String::from_utf8(buf).unwrap()
    }

    #[test]
    fn single_edge_list_line() {
        let mut b = NetworkBuilder::new(true);
        b.add_transfer("A", "B", 1);
        let text = to_string(&b.build().unwrap(), Format::EdgeListCsv);
        assert_eq!(text, "from,to,weight\nA,B,1\n");
    }

    #[test]
    fn empty_network_is_header_only() {
        let text = to_string(&TransferNetwork::empty(true), Format::EdgeListCsv);
        assert_eq!(text, "from,to,weight\n");
    }

    #[test]
    fn dot_is_export_only() {
        assert!(matches!(
            import("".as_bytes(), Format::Dot, true),
            Err(NetworkError::UnsupportedFormat(_))
        ));
        assert!(matches!(
            "pajek".parse::<Format>(),
            Err(NetworkError::UnsupportedFormat(_))
        ));
    }

    #[test]
    fn dot_output_shape() {
        let mut b = NetworkBuilder::new(true);
        b.add_transfer("ED", "CT \"scan\"", 2).set_category("ED", "acute");
        let text = to_string(&b.build().unwrap(), Format::Dot);
        assert!(text.starts_with("digraph transfers {"));
        assert!(text.contains("\"ED\" [category=\"acute\"];"));
        assert!(text.contains("\"ED\" -> \"CT \\\"scan\\\"\" [weight=2];"));
    }

    #[test]
    fn graphml_keeps_categories_and_direction() {
        let mut b = NetworkBuilder::new(false);
        b.add_transfer("a<b", "c&d", 7)
            .add_node("lonely")
            .set_category("a<b", "x \"y\"");
        let net = b.build().unwrap();
        let text = to_string(&net, Format::GraphMl);
        assert!(text.contains(r#"attr.name="category""#));
        let back = import(text.as_bytes(), Format::GraphMl, true).unwrap();
        assert_eq!(back, net);
    }

    #[test]
    fn edge_list_rejects_bad_header() {
        let err = import("a,b,c\nA,B,1\n".as_bytes(), Format::EdgeListCsv, true);
        assert!(matches!(err, Err(NetworkError::Parse { .. })));
    }

    fn arb_network() -> impl Strategy<Value = TransferNetwork> {
        (
            any::<bool>(),
            prop::collection::vec((0usize..8, 0usize..8, 1u64..50), 0..20),
            prop::collection::vec(0usize..8, 0..3),
            prop::collection::vec((0usize..8, 0usize..3), 0..4),
        )
            .prop_map(|(directed, edges, isolated, cats)| {
                let name = |i: usize| format!("node,{i}");
                let mut b = NetworkBuilder::new(directed);
                for (u, v, w) in edges {
                    if u != v {
                        b.add_transfer(&name(u), &name(v), w);
                    }
                }
                for i in isolated {
                    b.add_node(name(i));
                }
                let probe = b.clone().build().unwrap();
                for (i, c) in cats {
                    if probe.index_of(&name(i)).is_some() {
                        b.set_category(&name(i), format!("cat{c}"));
                    }
                }
                b.build().unwrap()
            })
    }

    proptest! {
        #[test]
        fn graphml_round_trip(net in arb_network()) {
            let text = to_string(&net, Format::GraphMl);
            prop_assert_eq!(import(text.as_bytes(), Format::GraphMl, true).unwrap(), net);
        }

        #[test]
        fn edge_list_round_trip(net in arb_network()) {
            // the edge list carries no annotations
            let net = net.with_categories(Default::default()).unwrap();
            let text = to_string(&net, Format::EdgeListCsv);
            let back = import(text.as_bytes(), Format::EdgeListCsv, net.is_directed()).unwrap();
            prop_assert_eq!(back, net);
        }
    }
}
