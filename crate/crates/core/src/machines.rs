//! A small register machine with step-bounded execution, finite-support
//! oracles and budgeted halting tables.
//!
//! Four registers, five opcodes. Every natural is a program: the code is the
//! bijective base-49 numeral of the instruction symbols, first instruction
//! least significant. Symbols:
//!
//! | symbol    | instruction                                    |
//! |-----------|------------------------------------------------|
//! | 0         | `halt`                                         |
//! | 1..=4     | `inc r`                                        |
//! | 5..=8     | `oracle r` (`R[r] := z(R[r])`)                 |
//! | 9..=16    | `jmp t`                                        |
//! | 17..=48   | `decjz r t` (jump to `t` if `R[r] = 0`, else decrement) |
//!
//! Each executed instruction costs one step. Running off the end of the
//! program (including jumping past it) halts and costs one step. Input is
//! placed in `R0`, output is read from `R0`.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigUint;
use num_traits::ToPrimitive;
use thiserror::Error;

use crate::spaces::{baire_code, baire_decode};

pub const REGISTERS: u8 = 4;
pub const JUMP_TARGETS: u8 = 8;
const ALPHABET: u64 = 1 + 4 + 4 + 8 + 32;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MachineError {
    #[error("program {program} does not halt within {budget} steps")]
    IndexNotHalting { program: u64, budget: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Instr {
    Halt,
    Inc(u8),
    Oracle(u8),
    Jmp(u8),
    DecJz(u8, u8),
}

impl Instr {
    fn symbol(self) -> u64 {
        match self {
            Instr::Halt => 0,
            Instr::Inc(r) => 1 + r as u64,
            Instr::Oracle(r) => 5 + r as u64,
            Instr::Jmp(t) => 9 + t as u64,
            Instr::DecJz(r, t) => 17 + r as u64 * 8 + t as u64,
        }
    }

    fn from_symbol(s: u64) -> Self {
        match s {
            0 => Instr::Halt,
            1..=4 => Instr::Inc((s - 1) as u8),
            5..=8 => Instr::Oracle((s - 5) as u8),
            9..=16 => Instr::Jmp((s - 9) as u8),
            _ => {
                let k = s - 17;
                Instr::DecJz((k / 8) as u8, (k % 8) as u8)
            }
        }
    }

    fn is_valid(self) -> bool {
        match self {
            Instr::Halt => true,
            Instr::Inc(r) | Instr::Oracle(r) => r < REGISTERS,
            Instr::Jmp(t) => t < JUMP_TARGETS,
            Instr::DecJz(r, t) => r < REGISTERS && t < JUMP_TARGETS,
        }
    }
}

impl fmt::Display for Instr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Instr::Halt => write!(f, "halt"),
            Instr::Inc(r) => write!(f, "inc r{r}"),
            Instr::Oracle(r) => write!(f, "oracle r{r}"),
            Instr::Jmp(t) => write!(f, "jmp {t}"),
            Instr::DecJz(r, t) => write!(f, "decjz r{r} {t}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Program {
    pub code: u64,
    pub instrs: Vec<Instr>,
}

impl Program {
    pub fn decode(code: u64) -> Self {
        let mut instrs = Vec::new();
        let mut n = code;
        while n > 0 {
            instrs.push(Instr::from_symbol((n - 1) % ALPHABET));
            n = (n - 1) / ALPHABET;
        }
        Self { code, instrs }
    }

    /// `None` if an instruction is out of range or the code overflows.
    pub fn encode(instrs: &[Instr]) -> Option<u64> {
        instrs.iter().rev().try_fold(0u64, |acc, &ins| {
            if !ins.is_valid() {
                return None;
            }
            acc.checked_mul(ALPHABET)?.checked_add(ins.symbol() + 1)
        })
    }

    pub fn from_instrs(instrs: Vec<Instr>) -> Option<Self> {
        Some(Self {
            code: Self::encode(&instrs)?,
            instrs,
        })
    }

    /// One instruction per line, `index: mnemonic`.
    pub fn listing(&self) -> String {
        let mut out = format!("; program {}\n", self.code);
        for (i, ins) in self.instrs.iter().enumerate() {
            out.push_str(&format!("{i}: {ins}\n"));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExecOutcome {
    Halted { steps: u64, output: u64 },
    StillRunning { budget: u64 },
}

impl ExecOutcome {
    pub fn halted(&self) -> bool {
        matches!(self, ExecOutcome::Halted { .. })
    }

    pub fn steps(&self) -> Option<u64> {
        match self {
            ExecOutcome::Halted { steps, .. } => Some(*steps),
            ExecOutcome::StillRunning { .. } => None,
        }
    }
}

/// Result of a run whose oracle may refuse to answer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PartialOutcome {
    Done(ExecOutcome),
    /// The machine asked for an oracle cell the caller could not supply.
    Blocked { cell: u64, steps: u64 },
}

/// Core interpreter. `oracle` returns `None` for cells it cannot reveal.
pub fn execute(
    program: &Program,
    input: u64,
    budget: u64,
    mut oracle: impl FnMut(u64) -> Option<u64>,
) -> PartialOutcome {
    let mut reg = [input, 0, 0, 0];
    let mut pc = 0usize;
    let mut steps = 0u64;
    let code = &program.instrs;
    while steps < budget {
        steps += 1;
        let Some(&ins) = code.get(pc) else {
            return PartialOutcome::Done(ExecOutcome::Halted {
                steps,
                output: reg[0],
            });
        };
        match ins {
            Instr::Halt => {
                return PartialOutcome::Done(ExecOutcome::Halted {
                    steps,
                    output: reg[0],
                })
            }
            Instr::Inc(r) => {
                reg[r as usize] = reg[r as usize].saturating_add(1);
                pc += 1;
            }
            Instr::Oracle(r) => {
                let cell = reg[r as usize];
                match oracle(cell) {
                    Some(v) => reg[r as usize] = v,
                    None => return PartialOutcome::Blocked { cell, steps },
                }
                pc += 1;
            }
            Instr::Jmp(t) => pc = t as usize,
            Instr::DecJz(r, t) => {
                if reg[r as usize] == 0 {
                    pc = t as usize;
                } else {
                    reg[r as usize] -= 1;
                    pc += 1;
                }
            }
        }
    }
    PartialOutcome::Done(ExecOutcome::StillRunning { budget })
}

fn done(p: PartialOutcome) -> ExecOutcome {
    match p {
        PartialOutcome::Done(o) => o,
        PartialOutcome::Blocked { .. } => unreachable!("total oracle never blocks"),
    }
}

/// Run with the all-zero oracle.
pub fn run(program: u64, input: u64, budget: u64) -> ExecOutcome {
    done(execute(&Program::decode(program), input, budget, |_| Some(0)))
}

/// Oracle with finite support; every other cell reads 0.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct OracleTape {
    support: BTreeMap<u64, u64>,
}

impl OracleTape {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Zero values are dropped so equal functions compare equal.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (u64, u64)>) -> Self {
        Self {
            support: pairs.into_iter().filter(|&(_, v)| v != 0).collect(),
        }
    }

    pub fn get(&self, cell: u64) -> u64 {
        self.support.get(&cell).copied().unwrap_or(0)
    }

    pub fn support(&self) -> &BTreeMap<u64, u64> {
        &self.support
    }

    /// Code as a finitely supported point of Baire space.
    pub fn baire_code(&self) -> BigUint {
        let len = self.support.keys().next_back().map_or(0, |&k| k + 1);
        let seq: Vec<u64> = (0..len).map(|i| self.get(i)).collect();
        baire_code(&seq)
    }

    /// `None` if a value does not fit a machine word.
    pub fn from_baire_code(code: &BigUint) -> Option<Self> {
        let mut pairs = Vec::new();
        for (i, v) in baire_decode(code).iter().enumerate() {
            pairs.push((i as u64, v.to_u64()?));
        }
        Some(Self::from_pairs(pairs))
    }

    /// Oracle tape whose Baire code is `n` (values capped by the code, so
    /// they always fit).
    pub fn nth(n: u64) -> Self {
        Self::from_baire_code(&BigUint::from(n)).expect("entries of a u64 code fit in u64")
    }
}

pub fn run_oracle(program: u64, z: &OracleTape, input: u64, budget: u64) -> ExecOutcome {
    done(execute(&Program::decode(program), input, budget, |c| Some(z.get(c))))
}

/// Budgeted stand-in for `z'(e)`: does `e` halt on 0 relative to `z`.
pub fn jump_bit(z: &OracleTape, e: u64, budget: u64) -> bool {
    run_oracle(e, z, 0, budget).halted()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HaltEntry {
    pub program: u64,
    pub halt_steps: u64,
}

/// Programs `<= p_max` halting on 0 within `s_max` steps, in dovetail order
/// (halt time, then program index).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HaltingEnumeration {
    pub entries: Vec<HaltEntry>,
    pub p_max: u64,
    pub s_max: u64,
    steps_by_program: Vec<Option<u64>>,
}

impl HaltingEnumeration {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn halt_steps(&self, program: u64) -> Option<u64> {
        self.steps_by_program.get(program as usize).copied().flatten()
    }

    pub fn halts(&self, program: u64) -> bool {
        self.halt_steps(program).is_some()
    }

    /// Halting bits for programs `0..n`; programs past `p_max` read 0.
    pub fn table(&self, n: u64) -> Vec<bool> {
        (0..n).map(|p| self.halts(p)).collect()
    }

    pub fn position(&self, program: u64) -> Option<usize> {
        self.entries.iter().position(|e| e.program == program)
    }
}

/// Dovetailing every `p <= p_max` against steps `<= s_max` lists each halting
/// program at the stage equal to its halt time; within a stage programs come
/// in index order. Running each program once to `s_max` and sorting by
/// `(halt_steps, program)` yields the same list.
pub fn enumerate_halting(p_max: u64, s_max: u64) -> HaltingEnumeration {
    use rayon::prelude::*;
    let steps_by_program: Vec<Option<u64>> = (0..=p_max)
        .into_par_iter()
        .map(|p| run(p, 0, s_max).steps())
        .collect();
    let mut entries: Vec<HaltEntry> = steps_by_program
        .iter()
        .enumerate()
        .filter_map(|(p, s)| {
            s.map(|halt_steps| HaltEntry {
                program: p as u64,
                halt_steps,
            })
        })
        .collect();
    entries.sort_by_key(|e| (e.halt_steps, e.program));
    HaltingEnumeration {
        entries,
        p_max,
        s_max,
        steps_by_program,
    }
}

/// The three-step test: run `n0` to get its halt time `k`, run `n1` for `k`
/// steps, answer whether `n1` halted at exactly step `k`.
pub fn halt_time_equiv(n0: u64, n1: u64, budget: u64) -> Result<bool, MachineError> {
    let k = run(n0, 0, budget)
        .steps()
        .ok_or(MachineError::IndexNotHalting { program: n0, budget })?;
    Ok(run(n1, 0, k).steps() == Some(k))
}

/// Loops on every input: `jmp 0`.
pub fn loop_program() -> u64 {
    Program::encode(&[Instr::Jmp(0)]).expect("valid")
}

/// Halts immediately: `halt`.
pub fn halt_program() -> u64 {
    Program::encode(&[Instr::Halt]).expect("valid")
}

/// Oracle-dependent programs used by the jump demos. Each reads the oracle
/// before deciding whether to halt.
pub fn oracle_programs() -> Vec<u64> {
    use Instr::*;
    let programs: [&[Instr]; 6] = [
        // halts iff z(0) = 0
        &[Oracle(0), DecJz(0, 3), Jmp(2), Halt],
        // halts iff z(0) != 0
        &[Oracle(0), DecJz(0, 3), Halt, Jmp(3)],
        // always halts, after about 2 z(0) steps
        &[Oracle(0), DecJz(0, 3), Jmp(1)],
        // halts iff z(1) = 0
        &[Inc(0), Oracle(0), DecJz(0, 4), Jmp(3), Halt],
        // halts iff z(z(0)) != 0
        &[Oracle(0), Oracle(0), DecJz(0, 4), Halt, Jmp(4)],
        // halts iff z(2) = 0
        &[Inc(0), Inc(0), Oracle(0), DecJz(0, 5), Jmp(4), Halt],
    ];
    programs
        .iter()
        .map(|p| Program::encode(p).expect("valid"))
        .collect()
}
