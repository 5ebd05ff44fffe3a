//! Time-ordered pulse programs and their line-based debug format.
//!
//! A schedule is a list of instantaneous one-qubit pulses over
//! `[0, duration]`. Between pulses the register evolves freely under its
//! permanent couplings. Averaging windows mark intervals in which a set of
//! qubits is treated as flipped infinitely fast: their couplings contribute
//! the mean over both values of the flipped bits instead of the current value.
//!
//! Text format, one item per line, numbers with 17 significant digits:
//!
//! ```text
//! duration <T>
//! global_phase <φ>
//! average <start> <end> <q> [<q> ...]
//! <t> <q> X | H | RZ <θ> | RX <θ> | P <θ> | U <re im ×4>
//! ```

use std::cmp::Ordering;

use thiserror::Error;

use crate::gate::Gate;
use crate::C64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScheduleError {
    #[error("event at t={time} outside [0, {duration}]")]
    EventOutOfRange { time: f64, duration: f64 },
    #[error("event on qubit {qubit} but the device has {n_qubits} qubits")]
    QubitOutOfRange { qubit: usize, n_qubits: usize },
    #[error("gate {gate} on qubit {qubit} is not unitary (error {error:.3e})")]
    NonUnitary {
        gate: String,
        qubit: usize,
        error: f64,
    },
    #[error("events are not sorted by (time, qubit)")]
    Unsorted,
    #[error("averaging window [{start}, {end}] is empty, out of range or overlaps another")]
    BadWindow { start: f64, end: f64 },
    #[error("negative or non-finite duration {0}")]
    BadDuration(f64),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseEvent {
    pub time: f64,
    pub qubit: usize,
    pub gate: Gate,
}

impl PulseEvent {
    pub fn new(time: f64, qubit: usize, gate: Gate) -> Self {
        PulseEvent { time, qubit, gate }
    }
}

/// Interval in which the qubits in `mask` are averaged over both values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AveragingWindow {
    pub start: f64,
    pub end: f64,
    pub mask: u64,
}

impl AveragingWindow {
    pub fn qubits(&self) -> impl Iterator<Item = usize> + '_ {
        (0..64).filter(move |q| self.mask >> q & 1 == 1)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PulseSchedule {
    pub duration: f64,
    pub events: Vec<PulseEvent>,
    /// Added to the state's global phase after the last event.
    pub global_phase_correction: f64,
    pub windows: Vec<AveragingWindow>,
}

fn event_order(a: &PulseEvent, b: &PulseEvent) -> Ordering {
    a.time.total_cmp(&b.time).then(a.qubit.cmp(&b.qubit))
}

impl PulseSchedule {
    pub fn idle(duration: f64) -> Self {
        PulseSchedule {
            duration,
            ..Default::default()
        }
    }

    /// Puts events into canonical `(time, qubit)` order. The sort is stable,
    /// so pulses on one qubit at one instant keep their listing order.
    pub fn normalize(&mut self) {
        self.events.sort_by(event_order);
        self.windows.sort_by(|a, b| a.start.total_cmp(&b.start));
    }

    pub fn push(&mut self, event: PulseEvent) {
        self.events.push(event);
    }

    /// Appends `other` after the end of this schedule.
    pub fn append(&mut self, other: &PulseSchedule) {
        let offset = self.duration;
        self.events.extend(other.events.iter().map(|e| PulseEvent {
            time: e.time + offset,
            ..*e
        }));
        self.windows
            .extend(other.windows.iter().map(|w| AveragingWindow {
                start: w.start + offset,
                end: w.end + offset,
                mask: w.mask,
            }));
        self.duration += other.duration;
        self.global_phase_correction += other.global_phase_correction;
        self.normalize();
    }

    pub fn pulse_count(&self) -> usize {
        self.events.len()
    }

    pub fn count_gate(&self, name: &str) -> usize {
        self.events.iter().filter(|e| e.gate.name() == name).count()
    }

    pub fn validate(&self, n_qubits: usize) -> Result<(), ScheduleError> {
        if !(self.duration.is_finite() && self.duration >= 0.0) {
            return Err(ScheduleError::BadDuration(self.duration));
        }
        for e in &self.events {
            if !(e.time >= 0.0 && e.time <= self.duration) {
                return Err(ScheduleError::EventOutOfRange {
                    time: e.time,
                    duration: self.duration,
                });
            }
            if e.qubit >= n_qubits {
                return Err(ScheduleError::QubitOutOfRange {
                    qubit: e.qubit,
                    n_qubits,
                });
            }
            let error = e.gate.unitarity_error();
            if error > crate::gate::UNITARY_TOL {
                return Err(ScheduleError::NonUnitary {
                    gate: e.gate.name().to_string(),
                    qubit: e.qubit,
                    error,
                });
            }
        }
        if self
            .events
            .windows(2)
            .any(|w| event_order(&w[0], &w[1]) == Ordering::Greater)
        {
            return Err(ScheduleError::Unsorted);
        }
        let mut last_end = 0.0;
        for w in &self.windows {
            if !(w.start >= last_end && w.end > w.start && w.end <= self.duration) {
                return Err(ScheduleError::BadWindow {
                    start: w.start,
                    end: w.end,
                });
            }
            last_end = w.end;
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("duration {:.16e}\n", self.duration));
        out.push_str(&format!(
            "global_phase {:.16e}\n",
            self.global_phase_correction
        ));
        for w in &self.windows {
            out.push_str(&format!("average {:.16e} {:.16e}", w.start, w.end));
            for q in w.qubits() {
                out.push_str(&format!(" {q}"));
            }
            out.push('\n');
        }
        for e in &self.events {
            out.push_str(&format!("{:.16e} {} {}\n", e.time, e.qubit, e.gate));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, ScheduleError> {
        let mut schedule = PulseSchedule::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let err = |message: String| ScheduleError::Parse { line, message };
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let tokens: Vec<&str> = content.split_whitespace().collect();
            let num = |s: &str| -> Result<f64, ScheduleError> {
                s.parse::<f64>()
                    .map_err(|_| err(format!("bad number {s:?}")))
            };
            match tokens[0] {
                "duration" if tokens.len() == 2 => schedule.duration = num(tokens[1])?,
                "global_phase" if tokens.len() == 2 => {
                    schedule.global_phase_correction = num(tokens[1])?
                }
                "average" if tokens.len() >= 3 => {
                    let mut mask = 0u64;
                    for t in &tokens[3..] {
                        let q: usize = t.parse().map_err(|_| err(format!("bad qubit {t:?}")))?;
                        if q >= 64 {
                            return Err(err(format!("qubit {q} too large")));
                        }
                        mask |= 1 << q;
                    }
                    schedule.windows.push(AveragingWindow {
                        start: num(tokens[1])?,
                        end: num(tokens[2])?,
                        mask,
                    });
                }
                _ => {
                    if tokens.len() < 3 {
                        return Err(err(format!("expected `t q GATE`, got {content:?}")));
                    }
                    let time = num(tokens[0])?;
                    let qubit: usize = tokens[1]
                        .parse()
                        .map_err(|_| err(format!("bad qubit {:?}", tokens[1])))?;
                    let params = tokens[3..]
                        .iter()
                        .map(|s| num(s))
                        .collect::<Result<Vec<_>, _>>()?;
                    let arity = |n: usize| {
                        if params.len() == n {
                            Ok(())
                        } else {
                            Err(err(format!(
                                "{} takes {n} parameters, got {}",
                                tokens[2],
                                params.len()
                            )))
                        }
                    };
                    let gate = match tokens[2] {
                        "X" => arity(0).map(|_| Gate::X)?,
                        "H" => arity(0).map(|_| Gate::H)?,
                        "RZ" => arity(1).map(|_| Gate::Rz(params[0]))?,
                        "RX" => arity(1).map(|_| Gate::Rx(params[0]))?,
                        "P" => arity(1).map(|_| Gate::Phase(params[0]))?,
                        "U" => {
                            arity(8)?;
                            let z = |i: usize| C64::new(params[2 * i], params[2 * i + 1]);
                            Gate::Matrix([[z(0), z(1)], [z(2), z(3)]])
                        }
                        other => return Err(err(format!("unknown gate {other:?}"))),
                    };
                    schedule.events.push(PulseEvent { time, qubit, gate });
                }
            }
        }
        Ok(schedule)
    }
}
