//! VHDL skeleton: memory units, switch sets, PPU shells and a structural top
//! level wired from the netlist.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use super::{index_width, AddressFile, EmissionConfig};
use crate::error::{Error, Result};
use crate::report::CheckReport;
use crate::schedule::{ComponentKind, Design, Side, SwitchKind};

const HEADER: &str = "library ieee;\nuse ieee.std_logic_1164.all;\nuse ieee.numeric_std.all;\n";

/// Derived bit widths for one design.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HdlWidths {
    pub word: usize,
    pub mu_id: usize,
}

pub fn hdl_widths(design: &Design, config: &EmissionConfig) -> Result<HdlWidths> {
    if config.word_width == 0 {
        return Err(Error::Config("word width must be positive".into()));
    }
    let need = index_width(design.plan.f);
    let mu_id = match config.id_width {
        Some(w) if w < need => {
            return Err(Error::Config(format!(
                "id width {w} cannot index {} memory units; need at least {need} bits",
                design.plan.f
            )))
        }
        Some(w) => w,
        None => need,
    };
    Ok(HdlWidths {
        word: config.word_width,
        mu_id,
    })
}

/// Aggregate with named association, which stays legal for one element.
fn aggregate<T: ToString>(values: impl IntoIterator<Item = T>) -> String {
    let items: Vec<String> = values
        .into_iter()
        .enumerate()
        .map(|(i, v)| format!("{i} => {}", v.to_string()))
        .collect();
    let mut s = String::from("(");
    for (n, item) in items.iter().enumerate() {
        if n > 0 {
            s.push_str(if n % 8 == 0 { ",\n    " } else { ", " });
        }
        s.push_str(item);
    }
    s.push(')');
    s
}

fn bit(b: bool) -> &'static str {
    if b {
        "'1'"
    } else {
        "'0'"
    }
}

fn package(widths: HdlWidths) -> String {
    format!(
        "{HEADER}
package pgfold_pkg is
  constant WORD_WIDTH : natural := {w};
  subtype word_t is std_logic_vector(WORD_WIDTH - 1 downto 0);
  type word_array is array (natural range <>) of word_t;
end package pgfold_pkg;
",
        w = widths.word
    )
}

fn memory_unit(design: &Design, side: Side, widths: HdlWidths) -> String {
    let f = design.plan.f;
    let file = AddressFile::from_design(design, side);
    let half = design.timing.half(side);
    let steps = half.writes.len();
    let read_wrap = file.pmus.first().map_or(1, |p| p.read.wrap.max(1));
    let depth = design.layout.capacity;
    let sd = design.side(side);
    let mut addr = [Vec::new(), Vec::new()];
    let mut mask = [Vec::new(), Vec::new()];
    for m in 0..f {
        for w in &half.writes {
            for b in 0..2 {
                let e = sd.writes.lookup(w.fold * f + m, 2 * w.pattern + b);
                addr[b].push(e.map_or(0, |e| e.address));
                mask[b].push(bit(e.is_some()));
            }
        }
    }
    let name = format!("memory_unit_{side}");
    let mut s = String::from(HEADER);
    s.push_str("use work.pgfold_pkg.all;\n\n");
    let _ = write!(
        s,
        "entity {name} is
  port (
    clk    : in  std_logic;
    reset  : in  std_logic;
    mu_id  : in  unsigned({idw} downto 0);
    rd_en  : in  std_logic;
    wr_en  : in  std_logic;
    din    : in  word_array(0 to 1);
    dout   : out word_array(0 to 1)
  );
end entity {name};

architecture rtl of {name} is
  constant DEPTH : natural := {depth};
  constant READ_WRAP : natural := {read_wrap};
  constant WRITE_STEPS : natural := {steps};
  type mem_t is array (0 to DEPTH - 1) of word_t;
  type addr_lut_t is array (0 to {lut_last}) of natural range 0 to DEPTH - 1;
  type mask_lut_t is array (0 to {lut_last}) of std_logic;
  -- indexed by mu_id * WRITE_STEPS + write step
  constant WRITE_ADDR_0 : addr_lut_t := {a0};
  constant WRITE_ADDR_1 : addr_lut_t := {a1};
  constant WRITE_MASK_0 : mask_lut_t := {m0};
  constant WRITE_MASK_1 : mask_lut_t := {m1};
  signal mem : mem_t := (others => (others => '0'));
  signal read_count : natural range 0 to READ_WRAP - 1 := 0;
  signal write_step : natural range 0 to WRITE_STEPS - 1 := 0;
begin
  access_proc : process (clk)
    variable idx : natural;
  begin
    if rising_edge(clk) then
      if reset = '1' then
        read_count <= 0;
        write_step <= 0;
      else
        if rd_en = '1' then
          dout(0) <= mem(2 * read_count);
          dout(1) <= mem(2 * read_count + 1);
          if read_count = READ_WRAP - 1 then
            read_count <= 0;
          else
            read_count <= read_count + 1;
          end if;
        end if;
        if wr_en = '1' then
          idx := to_integer(mu_id) * WRITE_STEPS + write_step;
          if WRITE_MASK_0(idx) = '1' then
            mem(WRITE_ADDR_0(idx)) <= din(0);
          end if;
          if WRITE_MASK_1(idx) = '1' then
            mem(WRITE_ADDR_1(idx)) <= din(1);
          end if;
          if write_step = WRITE_STEPS - 1 then
            write_step <= 0;
          else
            write_step <= write_step + 1;
          end if;
        end if;
      end if;
    end if;
  end process access_proc;
end architecture rtl;
",
        idw = widths.mu_id - 1,
        lut_last = f * steps - 1,
        a0 = aggregate(addr[0].iter()),
        a1 = aggregate(addr[1].iter()),
        m0 = aggregate(mask[0].iter()),
        m1 = aggregate(mask[1].iter()),
    );
    s
}

fn switch(design: &Design, reader: Side, kind: SwitchKind) -> String {
    let lut = design.lut(reader, kind);
    let seq = &design.side(reader).sequence;
    let rho_hat = lut.invalid_code;
    let slots = seq.slot_count();
    let patterns = seq.pattern_count();
    let code = |c: Option<usize>| c.unwrap_or(lut.invalid_code);
    let name = lut.set_name();
    let (din_hi, dout_hi) = match kind {
        SwitchKind::Mux => (1, rho_hat - 1),
        SwitchKind::Demux => (rho_hat - 1, 1),
    };
    let route = match kind {
        SwitchKind::Mux => format!(
            "    for c in 0 to {last} loop
      dout(c) <= (others => '0');
      if SEL_0(p) = c then
        dout(c) <= din(0);
      end if;
      if SEL_1(p) = c then
        dout(c) <= din(1);
      end if;
    end loop;
",
            last = rho_hat - 1
        ),
        SwitchKind::Demux => "    dout(0) <= (others => '0');
    dout(1) <= (others => '0');
    if SEL_0(p) /= INVALID then
      dout(0) <= din(SEL_0(p));
    end if;
    if SEL_1(p) /= INVALID then
      dout(1) <= din(SEL_1(p));
    end if;
"
        .to_string(),
    };
    format!(
        "{HEADER}use work.pgfold_pkg.all;

entity {name} is
  port (
    clk    : in  std_logic;
    reset  : in  std_logic;
    enable : in  std_logic;
    din    : in  word_array(0 to {din_hi});
    dout   : out word_array(0 to {dout_hi})
  );
end entity {name};

architecture rtl of {name} is
  constant INVALID : natural := {rho_hat};
  type sel_t is array (0 to {p_last}) of natural range 0 to INVALID;
  type slot_map_t is array (0 to {s_last}) of natural range 0 to {p_last};
  constant SLOT_PATTERN : slot_map_t := {slot_map};
  constant SEL_0 : sel_t := {sel0};
  constant SEL_1 : sel_t := {sel1};
  signal slot : natural range 0 to {s_last} := 0;
begin
  counter : process (clk)
  begin
    if rising_edge(clk) then
      if reset = '1' then
        slot <= 0;
      elsif enable = '1' then
        if slot = {s_last} then
          slot <= 0;
        else
          slot <= slot + 1;
        end if;
      end if;
    end if;
  end process counter;

  route : process (slot, din)
    variable p : natural range 0 to {p_last};
  begin
    p := SLOT_PATTERN(slot);
{route}  end process route;
end architecture rtl;
",
        p_last = patterns - 1,
        s_last = slots - 1,
        slot_map = aggregate(seq.slots.iter().map(|s| s.pattern)),
        sel0 = aggregate(lut.rows.iter().map(|r| code(r[0]))),
        sel1 = aggregate(lut.rows.iter().map(|r| code(r[1]))),
    )
}

fn ppu(design: &Design, side: Side) -> String {
    let q = design.netlist.annotations.register_replication;
    let name = format!("ppu_{side}");
    format!(
        "{HEADER}use work.pgfold_pkg.all;

-- Processing shell; the node function goes in compute.
entity {name} is
  port (
    clk    : in  std_logic;
    reset  : in  std_logic;
    valid  : in  std_logic;
    fold   : in  natural range 0 to {q_last};
    din    : in  word_array(0 to 1);
    dout   : out word_array(0 to 1)
  );
end entity {name};

architecture shell of {name} is
  -- one copy of the node state per folded LPU
  type state_t is array (0 to {q_last}) of word_t;
  signal state : state_t := (others => (others => '0'));
begin
  compute : process (clk)
  begin
    if rising_edge(clk) then
      if reset = '1' then
        state <= (others => (others => '0'));
      elsif valid = '1' then
        state(fold) <= state(fold) xor din(0) xor din(1);
      end if;
      dout(0) <= state(fold);
      dout(1) <= state(fold);
    end if;
  end process compute;
end architecture shell;
",
        q_last = q - 1
    )
}

fn top(design: &Design, widths: HdlWidths) -> String {
    let net = &design.netlist;
    let f = design.plan.f;
    let q = design.plan.q;
    let rho_hat = |r: Side| net.annotations.instances[&r].rho_hat;
    let mut decl = String::new();
    let mut body = String::new();
    for side in Side::BOTH {
        let _ = writeln!(decl, "  signal {side}_demux_en : std_logic := '0';");
        let _ = writeln!(decl, "  signal {side}_fold : natural range 0 to {} := 0;", q - 1);
        for i in 0..f {
            let _ = writeln!(decl, "  signal pmu_{side}{i}_din : word_array(0 to 1);");
            let _ = writeln!(decl, "  signal pmu_{side}{i}_dout : word_array(0 to 1);");
            let _ = writeln!(decl, "  signal {side}_mux{i}_out : word_array(0 to {});", rho_hat(side) - 1);
            let _ = writeln!(decl, "  signal {side}_demux{i}_in : word_array(0 to {});", rho_hat(side) - 1);
            let _ = writeln!(decl, "  signal {side}_demux{i}_out : word_array(0 to 1);");
        }
    }
    for side in Side::BOTH {
        let other = side.other();
        let _ = write!(
            body,
            "  {side}_stagger : process (clk)
  begin
    if rising_edge(clk) then
      {side}_demux_en <= {side}_read_en;
    end if;
  end process {side}_stagger;

"
        );
        for c in net.components.iter().filter(|c| c.side == side) {
            let i = c.index;
            let _ = match c.kind {
                ComponentKind::Ppu => write!(
                    body,
                    "  u_{id} : entity work.ppu_{side} port map (
    clk => clk, reset => reset, valid => {side}_demux_en, fold => {side}_fold,
    din => {side}_demux{i}_out, dout => pmu_{side}{i}_din);
",
                    id = c.id
                ),
                ComponentKind::Pmu => write!(
                    body,
                    "  u_{id} : entity work.memory_unit_{side} port map (
    clk => clk, reset => reset, mu_id => to_unsigned({i}, {w}),
    rd_en => {other}_read_en, wr_en => {side}_write_en,
    din => pmu_{side}{i}_din, dout => pmu_{side}{i}_dout);
",
                    id = c.id,
                    w = widths.mu_id
                ),
                ComponentKind::Mux => write!(
                    body,
                    "  u_{id} : entity work.{side}_mux port map (
    clk => clk, reset => reset, enable => {side}_read_en,
    din => pmu_{other}{i}_dout, dout => {side}_mux{i}_out);
",
                    id = c.id
                ),
                ComponentKind::Demux => write!(
                    body,
                    "  u_{id} : entity work.{side}_demux port map (
    clk => clk, reset => reset, enable => {side}_demux_en,
    din => {side}_demux{i}_in, dout => {side}_demux{i}_out);
",
                    id = c.id
                ),
            };
        }
        let _ = writeln!(body);
        for w in net.wires_of(side) {
            let _ = writeln!(
                body,
                "  {}_in({}) <= {}_out({});",
                w.to.component, w.to.port, w.from.component, w.from.port
            );
        }
        let _ = writeln!(body);
    }
    format!(
        "{HEADER}use work.pgfold_pkg.all;

entity top is
  port (
    clk        : in  std_logic;
    reset      : in  std_logic;
    h_read_en  : in  std_logic;
    p_read_en  : in  std_logic;
    h_write_en : in  std_logic;
    p_write_en : in  std_logic;
    h_fold_in  : in  natural range 0 to {q_last};
    p_fold_in  : in  natural range 0 to {q_last};
    probe      : out word_t
  );
end entity top;

architecture structural of top is
{decl}begin
  h_fold <= h_fold_in;
  p_fold <= p_fold_in;
  probe <= pmu_h0_din(0);

{body}end architecture structural;
",
        q_last = q - 1
    )
}

/// All VHDL files keyed by relative path.
pub fn emit_hdl(design: &Design, config: &EmissionConfig) -> Result<BTreeMap<String, String>> {
    let widths = hdl_widths(design, config)?;
    let mut out = BTreeMap::new();
    out.insert("hdl/pgfold_pkg.vhd".to_string(), package(widths));
    for side in Side::BOTH {
        out.insert(format!("hdl/memory_unit_{side}.vhd"), memory_unit(design, side, widths));
        out.insert(format!("hdl/ppu_{side}.vhd"), ppu(design, side));
        for kind in [SwitchKind::Mux, SwitchKind::Demux] {
            out.insert(format!("hdl/{side}_{}.vhd", kind.tag()), switch(design, side, kind));
        }
    }
    out.insert("hdl/top.vhd".to_string(), top(design, widths));
    for (name, text) in &out {
        let report = check_vhdl(name, text);
        if !report.passed() {
            return Err(Error::Internal(format!("emitted VHDL failed lexical check: {report}")));
        }
    }
    Ok(out)
}

fn tokenize(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    for line in text.lines() {
        let code = line.split("--").next().unwrap_or("");
        let mut cur = String::new();
        let chars: Vec<char> = code.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            if c.is_ascii_alphanumeric() || c == '_' {
                cur.push(c.to_ascii_lowercase());
            } else {
                if !cur.is_empty() {
                    tokens.push(std::mem::take(&mut cur));
                }
                if c == '\'' && i + 2 < chars.len() && chars[i + 2] == '\'' {
                    tokens.push(format!("'{}'", chars[i + 1]));
                    i += 2;
                } else if !c.is_whitespace() {
                    tokens.push(c.to_string());
                }
            }
            i += 1;
        }
        if !cur.is_empty() {
            tokens.push(cur);
        }
    }
    tokens
}

/// Lexical well-formedness: balanced parentheses, matched block keywords
/// with consistent names, and every declared signal referenced.
pub fn check_vhdl(name: &str, text: &str) -> CheckReport {
    let mut report = CheckReport::new(format!("vhdl {name}"));
    let tokens = tokenize(text);
    let mut depth: i64 = 0;
    for t in &tokens {
        match t.as_str() {
            "(" => depth += 1,
            ")" => depth -= 1,
            _ => {}
        }
        if depth < 0 {
            break;
        }
    }
    report.check(depth == 0, || format!("unbalanced parentheses (depth {depth})"));

    let mut stack: Vec<(String, Option<String>)> = Vec::new();
    for (i, t) in tokens.iter().enumerate() {
        let prev = i.checked_sub(1).map(|p| tokens[p].as_str());
        let next = tokens.get(i + 1).map(String::as_str);
        match t.as_str() {
            "end" => {
                let kind = next.unwrap_or("");
                let block_kind = match kind {
                    "entity" | "architecture" | "process" | "if" | "loop" | "package" => kind,
                    _ => {
                        report.fail(format!("bare or unknown end at token {i}"));
                        continue;
                    }
                };
                match stack.pop() {
                    Some((open, label)) => {
                        report.check(open == block_kind, || format!("end {block_kind} closes {open}"));
                        if let Some(label) = label {
                            let closing = tokens.get(i + 2).map(String::as_str);
                            report.check(closing == Some(label.as_str()), || {
                                format!("end {block_kind} names {closing:?}, expected {label}")
                            });
                        }
                    }
                    None => report.fail(format!("end {block_kind} without opener")),
                }
            }
            "entity" | "architecture" | "package" if prev != Some("end") && prev != Some(":") => {
                stack.push((t.clone(), next.map(str::to_string)));
            }
            "process" if prev != Some("end") => {
                let label = (i >= 2 && tokens[i - 1] == ":").then(|| tokens[i - 2].clone());
                stack.push((t.clone(), label));
            }
            "if" | "loop" if prev != Some("end") => stack.push((t.clone(), None)),
            _ => {}
        }
    }
    report.check(stack.is_empty(), || format!("unclosed blocks: {stack:?}"));

    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for t in &tokens {
        *counts.entry(t.as_str()).or_default() += 1;
    }
    for (i, t) in tokens.iter().enumerate() {
        if t == "signal" && tokens.get(i + 2).map(String::as_str) == Some(":") {
            let sig = tokens[i + 1].as_str();
            report.check(counts.get(sig).copied().unwrap_or(0) >= 2, || format!("signal {sig} declared but unused"));
        }
    }
    report
}
