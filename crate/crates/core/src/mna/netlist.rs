//! Plain-text netlist reader.
//!
//! One statement per line, tokens separated by whitespace, `#` starts a comment:
//!
//! ```text
//! R  <name> <n+> <n->  <ohms>
//! C  <name> <n+> <n->  <farads>
//! G  <name> <out+> <out-> <ctrl+> <ctrl-> <siemens>
//! I  <name> <n+> <n->                      # noise/injection port, no admittance
//! NOISE <element> thermal [kelvin]         # resistor only, default 300 K
//! NOISE <element> shot <amperes>
//! NOISE <element> flat-current <A/rtHz>
//! NOISE <element> flat-voltage <V/rtHz>    # resistor only
//! NOISE <element> flicker-voltage <V/rtHz> <pivot Hz> [exponent]
//! OUT <n+> [n-]
//! ```
//!
//! Node `0` (or `gnd`) is ground. Values take SPICE scale suffixes
//! (`f p n u m k meg g t`, case-insensitive); trailing unit letters are ignored.

use crate::error::{Error, Result};
use crate::mna::{Network, GROUND};
use crate::noise::{NoiseSource, DEFAULT_TEMPERATURE};

struct Token<'a> {
    text: &'a str,
    column: usize,
}

fn tokenize(line: &str) -> Vec<Token<'_>> {
    let code = line.split('#').next().unwrap_or("");
    let mut out = Vec::new();
    let mut start = None;
    for (i, ch) in code.char_indices() {
        match (ch.is_whitespace(), start) {
            (true, Some(s)) => {
                out.push(Token { text: &code[s..i], column: code[..s].chars().count() + 1 });
                start = None;
            }
            (false, None) => start = Some(i),
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push(Token { text: &code[s..], column: code[..s].chars().count() + 1 });
    }
    out
}

/// Parses a number with an optional SPICE scale suffix.
pub(crate) fn spice_value(text: &str) -> Option<f64> {
    let split = text
        .char_indices()
        .find(|&(i, c)| c.is_alphabetic() && !((c == 'e' || c == 'E') && exponent_follows(&text[i + 1..])))
        .map(|(i, _)| i)
        .unwrap_or(text.len());
    let (num, suffix) = text.split_at(split);
    let base: f64 = num.parse().ok()?;
    let lower = suffix.to_lowercase();
    let scale = if lower.starts_with("meg") {
        1e6
    } else {
        match lower.chars().next() {
            None => 1.0,
            Some('t') => 1e12,
            Some('g') => 1e9,
            Some('k') => 1e3,
            Some('m') => 1e-3,
            Some('u') | Some('µ') => 1e-6,
            Some('n') => 1e-9,
            Some('p') => 1e-12,
            Some('f') => 1e-15,
            // bare unit letters such as "F" or "Ohm" are not scale factors
            Some(_) => 1.0,
        }
    };
    Some(base * scale)
}

fn exponent_follows(rest: &str) -> bool {
    let rest = rest.strip_prefix(['+', '-']).unwrap_or(rest);
    rest.chars().next().is_some_and(|c| c.is_ascii_digit())
}

pub fn parse_netlist(source: &str, file: &str) -> Result<Network> {
    let mut net = Network::new();
    let mut output = None;
    for (lineno, line) in source.lines().enumerate() {
        let toks = tokenize(line);
        let Some(head) = toks.first() else { continue };
        let err =
            |column: usize, message: String| Error::Parse { file: file.to_string(), line: lineno + 1, column, message };
        let need = |n: usize| -> Result<()> {
            if toks.len() < n {
                let col = toks.last().map(|t| t.column + t.text.chars().count()).unwrap_or(1);
                Err(err(col, format!("`{}` needs {} fields, found {}", head.text, n, toks.len())))
            } else if toks.len() > n && !head.text.eq_ignore_ascii_case("NOISE") {
                Err(err(toks[n].column, format!("unexpected field `{}`", toks[n].text)))
            } else {
                Ok(())
            }
        };
        let value = |t: &Token| -> Result<f64> {
            spice_value(t.text).ok_or_else(|| err(t.column, format!("`{}` is not a number", t.text)))
        };
        // maps library errors onto the token that caused them
        let at = |column: usize| move |e: Error| err(column, e.to_string());

        match head.text.to_ascii_uppercase().as_str() {
            "R" | "C" => {
                need(5)?;
                let (p, n) = (net.node(toks[2].text), net.node(toks[3].text));
                let v = value(&toks[4])?;
                if head.text.eq_ignore_ascii_case("R") {
                    net.add_resistor(toks[1].text, p, n, v).map_err(at(toks[4].column))?;
                } else {
                    net.add_capacitor(toks[1].text, p, n, v).map_err(at(toks[4].column))?;
                }
            }
            "G" => {
                need(7)?;
                let out = (net.node(toks[2].text), net.node(toks[3].text));
                let ctrl = (net.node(toks[4].text), net.node(toks[5].text));
                let gm = value(&toks[6])?;
                net.add_vccs(toks[1].text, out, ctrl, gm).map_err(at(toks[6].column))?;
            }
            "I" => {
                need(4)?;
                let (p, n) = (net.node(toks[2].text), net.node(toks[3].text));
                net.add_current_port(toks[1].text, p, n).map_err(at(toks[1].column))?;
            }
            "OUT" => {
                if toks.len() < 2 || toks.len() > 3 {
                    return Err(err(head.column, "OUT takes one or two nodes".into()));
                }
                let p = net.node(toks[1].text);
                let n = toks.get(2).map(|t| net.node(t.text)).unwrap_or(GROUND);
                output = Some((p, n, lineno + 1));
            }
            "NOISE" => {
                if toks.len() < 3 {
                    return Err(err(head.column, "NOISE needs an element name and a kind".into()));
                }
                let target = toks[1].text;
                let elem = net
                    .elements()
                    .iter()
                    .find(|e| e.name == target)
                    .cloned()
                    .ok_or_else(|| err(toks[1].column, format!("no element named `{target}` defined above")))?;
                let kind = toks[2].text.to_ascii_lowercase();
                let arity = |lo: usize, hi: usize| -> Result<()> {
                    if toks.len() < lo || toks.len() > hi {
                        Err(err(toks[2].column, format!("`{kind}` takes {} to {} parameters", lo - 3, hi - 3)))
                    } else {
                        Ok(())
                    }
                };
                let source = match kind.as_str() {
                    "thermal" => {
                        arity(3, 4)?;
                        let t = toks.get(3).map(&value).transpose()?.unwrap_or(DEFAULT_TEMPERATURE);
                        let crate::mna::ElementKind::Resistor { resistance } = elem.kind else {
                            return Err(err(
                                toks[1].column,
                                format!("thermal noise needs a resistor, `{target}` is not one"),
                            ));
                        };
                        NoiseSource::thermal_current(resistance, t).map_err(at(toks[2].column))?
                    }
                    "shot" => {
                        arity(4, 4)?;
                        NoiseSource::shot(value(&toks[3])?).map_err(at(toks[3].column))?
                    }
                    "flat-current" => {
                        arity(4, 4)?;
                        NoiseSource::flat_current(value(&toks[3])?).map_err(at(toks[3].column))?
                    }
                    "flat-voltage" => {
                        arity(4, 4)?;
                        NoiseSource::flat_voltage(value(&toks[3])?).map_err(at(toks[3].column))?
                    }
                    "flicker-voltage" => {
                        arity(5, 6)?;
                        let exp = toks.get(5).map(&value).transpose()?.unwrap_or(1.0);
                        NoiseSource::flicker_voltage(value(&toks[3])?, value(&toks[4])?, exp)
                            .map_err(at(toks[3].column))?
                    }
                    other => return Err(err(toks[2].column, format!("unknown noise kind `{other}`"))),
                };
                net.attach_noise(target, source).map_err(at(toks[2].column))?;
            }
            other => return Err(err(head.column, format!("unknown statement `{other}`"))),
        }
    }
    let (p, n, line) = output.ok_or_else(|| Error::Parse {
        file: file.to_string(),
        line: source.lines().count().max(1),
        column: 1,
        message: "missing OUT statement".into(),
    })?;
    net.set_output(p, n).map_err(|e| Error::Parse {
        file: file.to_string(),
        line,
        column: 1,
        message: e.to_string(),
    })?;
    Ok(net)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::{thermal_voltage_density, Frequency};
    use approx::assert_relative_eq;

    #[test]
    fn spice_suffixes() {
        assert_eq!(spice_value("1G"), Some(1e9));
        assert_relative_eq!(spice_value("12p").unwrap(), 12e-12);
        assert_relative_eq!(spice_value("12pF").unwrap(), 12e-12);
        assert_eq!(spice_value("2meg"), Some(2e6));
        assert_relative_eq!(spice_value("3m").unwrap(), 3e-3);
        assert_eq!(spice_value("1e9"), Some(1e9));
        assert_relative_eq!(spice_value("1.5e-3k").unwrap(), 1.5);
        assert_eq!(spice_value("10Ohm"), Some(10.0));
        assert_eq!(spice_value("abc"), None);
    }

    #[test]
    fn parses_rc_noise_network() {
        let src = "# gate node\nR rm gate 0 1G\nC cm gate 0 12p\nNOISE rm thermal 300\nOUT gate\n";
        let net = parse_netlist(src, "rc.net").unwrap();
        assert_eq!(net.node_count(), 1);
        let v = net.noise_solve(Frequency::new(0.01).unwrap()).unwrap();
        assert_relative_eq!(v, thermal_voltage_density(1e9, 300.0).unwrap(), max_relative = 1e-5);
    }

    #[test]
    fn reports_line_and_column() {
        let src = "R r1 a 0 1k\nC c1 a 0 -1p\nOUT a\n";
        match parse_netlist(src, "bad.net").unwrap_err() {
            Error::Parse { line, column, file, .. } => {
                assert_eq!((line, column), (2, 10));
                assert_eq!(file, "bad.net");
            }
            e => panic!("unexpected {e:?}"),
        }
        let src = "R r1 a 0 1k\nX r2 a 0 1k\n";
        assert!(matches!(parse_netlist(src, "x"), Err(Error::Parse { line: 2, column: 1, .. })));
        let src = "R r1 a 0 1k\nNOISE r9 thermal\nOUT a\n";
        assert!(matches!(parse_netlist(src, "x"), Err(Error::Parse { line: 2, column: 7, .. })));
        let src = "R r1 a 0 1k 5\nOUT a\n";
        assert!(matches!(parse_netlist(src, "x"), Err(Error::Parse { line: 1, column: 13, .. })));
        assert!(matches!(parse_netlist("R r1 a 0 1k\n", "x"), Err(Error::Parse { .. })));
    }

    #[test]
    fn thermal_requires_resistor() {
        let src = "C c1 a 0 1p\nR r1 a 0 1k\nNOISE c1 thermal\nOUT a\n";
        assert!(matches!(parse_netlist(src, "x"), Err(Error::Parse { line: 3, .. })));
    }
}
