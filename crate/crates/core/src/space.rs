//! Partial allocation matrices and the construction DAG built on them.
//!
//! A state is an `M x W` matrix whose cell `(m, w)` is either free or holds
//! one device. The initial state is all-free; each action fills one free cell
//! with one still-unassigned device, so every trajectory has exactly `U`
//! steps and ends in a complete allocation.
//!
//! Device ids are 0-based in the API ([`Action::device`],
//! [`AllocationMatrix::occupant`]) and 1-based in raw entries and in the
//! canonical text form, where `0` marks a free cell.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use rand::Rng as _;

use crate::{Error, Result};

/// Default refusal threshold for [`enumerate_complete`].
pub const DEFAULT_ENUMERATION_CAP: u128 = 1_000_000;

const UNPLACED: u32 = u32::MAX;

/// Problem dimensions: servers `M`, subcarriers `W`, devices `U`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Dims {
    pub servers: usize,
    pub subcarriers: usize,
    pub devices: usize,
}

impl Dims {
    pub const fn new(servers: usize, subcarriers: usize, devices: usize) -> Self {
        Self {
            servers,
            subcarriers,
            devices,
        }
    }

    /// Number of resource blocks `M * W`.
    pub const fn cells(&self) -> usize {
        self.servers * self.subcarriers
    }

    /// Size of the flattened action space `M * W * U`.
    pub const fn num_actions(&self) -> usize {
        self.cells() * self.devices
    }

    /// Length of the one-hot state encoding `M * W * (U + 1)`.
    pub const fn encoding_len(&self) -> usize {
        self.cells() * (self.devices + 1)
    }

    pub const fn is_feasible(&self) -> bool {
        self.devices <= self.cells()
    }

    /// `(M W)! / (M W - U)!`, the number of complete allocations, or `None`
    /// on overflow or when the instance is infeasible.
    pub fn complete_count(&self) -> Option<u128> {
        if !self.is_feasible() {
            return None;
        }
        let cells = self.cells() as u128;
        (0..self.devices as u128).try_fold(1u128, |acc, t| acc.checked_mul(cells - t))
    }
}

/// One construction step: put `device` on `server` over `subcarrier`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Action {
    pub server: usize,
    pub subcarrier: usize,
    pub device: usize,
}

impl Action {
    pub const fn new(server: usize, subcarrier: usize, device: usize) -> Self {
        Self {
            server,
            subcarrier,
            device,
        }
    }

    /// Flat index in `[0, M W U)`: cell-major, device fastest.
    pub fn index(&self, dims: Dims) -> usize {
        debug_assert!(self.server < dims.servers);
        debug_assert!(self.subcarrier < dims.subcarriers);
        debug_assert!(self.device < dims.devices);
        (self.server * dims.subcarriers + self.subcarrier) * dims.devices + self.device
    }

    pub fn from_index(dims: Dims, index: usize) -> Self {
        assert!(index < dims.num_actions(), "action index out of range");
        let device = index % dims.devices;
        let cell = index / dims.devices;
        Self {
            server: cell / dims.subcarriers,
            subcarrier: cell % dims.subcarriers,
            device,
        }
    }

    fn cell(&self, dims: Dims) -> usize {
        self.server * dims.subcarriers + self.subcarrier
    }
}

/// Feasible-action mask over the flattened action space.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActionMask {
    pub mask: Vec<bool>,
    /// Set when the state is complete; the mask is then empty.
    pub terminal: bool,
}

impl ActionMask {
    pub fn count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }
}

/// The resource allocation matrix `X`, possibly partial.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AllocationMatrix {
    dims: Dims,
    /// Row-major raw entries; 0 = free, `d + 1` = device `d`.
    cells: Vec<u16>,
    /// Cell index held by each device, or `UNPLACED`.
    placement: Vec<u32>,
    assigned: usize,
}

impl AllocationMatrix {
    /// The all-free initial state `s0`.
    pub fn initial(dims: Dims) -> Self {
        assert!(dims.devices < u16::MAX as usize, "too many devices");
        Self {
            dims,
            cells: vec![0; dims.cells()],
            placement: vec![UNPLACED; dims.devices],
            assigned: 0,
        }
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn assigned_count(&self) -> usize {
        self.assigned
    }

    pub fn is_complete(&self) -> bool {
        self.assigned == self.dims.devices
    }

    /// Raw 1-based entry of cell `(m, w)`, 0 when free.
    pub fn entry(&self, server: usize, subcarrier: usize) -> u16 {
        self.cells[self.cell_index(server, subcarrier)]
    }

    /// 0-based device occupying `(m, w)`.
    pub fn occupant(&self, server: usize, subcarrier: usize) -> Option<usize> {
        match self.entry(server, subcarrier) {
            0 => None,
            id => Some(id as usize - 1),
        }
    }

    /// `(server, subcarrier)` held by device `d`.
    pub fn block_of(&self, device: usize) -> Option<(usize, usize)> {
        match self.placement[device] {
            UNPLACED => None,
            cell => {
                let cell = cell as usize;
                Some((cell / self.dims.subcarriers, cell % self.dims.subcarriers))
            }
        }
    }

    /// Row-major raw entries.
    pub fn entries(&self) -> &[u16] {
        &self.cells
    }

    fn cell_index(&self, server: usize, subcarrier: usize) -> usize {
        assert!(
            server < self.dims.servers && subcarrier < self.dims.subcarriers,
            "cell ({server}, {subcarrier}) out of range"
        );
        server * self.dims.subcarriers + subcarrier
    }

    pub fn is_valid(&self, action: Action) -> bool {
        action.server < self.dims.servers
            && action.subcarrier < self.dims.subcarriers
            && action.device < self.dims.devices
            && self.cells[action.cell(self.dims)] == 0
            && self.placement[action.device] == UNPLACED
    }

    /// Mask of valid actions: the cell is free and the device is unassigned.
    pub fn valid_actions(&self) -> ActionMask {
        if self.is_complete() {
            return ActionMask {
                mask: Vec::new(),
                terminal: true,
            };
        }
        let u = self.dims.devices;
        let mut mask = vec![false; self.dims.num_actions()];
        for (cell, &entry) in self.cells.iter().enumerate() {
            if entry != 0 {
                continue;
            }
            for (d, &p) in self.placement.iter().enumerate() {
                mask[cell * u + d] = p == UNPLACED;
            }
        }
        ActionMask {
            mask,
            terminal: false,
        }
    }

    /// Child state reached by `action`.
    pub fn apply(&self, action: Action) -> Result<Self> {
        let mut next = self.clone();
        next.apply_in_place(action)?;
        Ok(next)
    }

    pub fn apply_in_place(&mut self, action: Action) -> Result<()> {
        if !self.is_valid(action) {
            return Err(Error::InvalidAction {
                server: action.server,
                subcarrier: action.subcarrier,
                device: action.device,
            });
        }
        let cell = action.cell(self.dims);
        self.cells[cell] = action.device as u16 + 1;
        self.placement[action.device] = cell as u32;
        self.assigned += 1;
        Ok(())
    }

    /// Free cell `(m, w)`, returning the device that held it.
    pub fn clear(&mut self, server: usize, subcarrier: usize) -> Option<usize> {
        let cell = self.cell_index(server, subcarrier);
        let device = match self.cells[cell] {
            0 => return None,
            id => id as usize - 1,
        };
        self.cells[cell] = 0;
        self.placement[device] = UNPLACED;
        self.assigned -= 1;
        Some(device)
    }

    /// Every parent under single-assignment removal, with the action that
    /// leads back to `self`. A state with `t` assignments has `t` parents.
    pub fn parents(&self) -> Vec<(AllocationMatrix, Action)> {
        (0..self.dims.devices)
            .filter_map(|d| self.block_of(d).map(|(m, w)| (d, m, w)))
            .map(|(d, m, w)| {
                let mut parent = self.clone();
                parent.clear(m, w);
                (parent, Action::new(m, w, d))
            })
            .collect()
    }

    /// Free cells as `(server, subcarrier)` pairs, row-major.
    pub fn free_blocks(&self) -> Vec<(usize, usize)> {
        let w = self.dims.subcarriers;
        self.cells
            .iter()
            .enumerate()
            .filter(|(_, &e)| e == 0)
            .map(|(c, _)| (c / w, c % w))
            .collect()
    }

    /// Move an assigned device to a free block.
    pub fn relocate(&mut self, device: usize, server: usize, subcarrier: usize) -> Result<()> {
        let target = self.cell_index(server, subcarrier);
        let from = self.placement[device];
        if from == UNPLACED || self.cells[target] != 0 {
            return Err(Error::InvalidAction {
                server,
                subcarrier,
                device,
            });
        }
        self.cells[from as usize] = 0;
        self.cells[target] = device as u16 + 1;
        self.placement[device] = target as u32;
        Ok(())
    }

    /// Exchange the blocks of two assigned devices.
    pub fn swap_devices(&mut self, a: usize, b: usize) {
        let (ca, cb) = (self.placement[a], self.placement[b]);
        assert!(ca != UNPLACED && cb != UNPLACED, "swap of unassigned device");
        self.cells.swap(ca as usize, cb as usize);
        self.placement.swap(a, b);
    }

    /// Cell-major one-hot encoding of length `M W (U + 1)`.
    pub fn encode(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.dims.encoding_len()];
        self.encode_into(&mut out);
        out
    }

    pub fn encode_into(&self, out: &mut [f64]) {
        assert_eq!(out.len(), self.dims.encoding_len(), "encoding buffer length");
        out.fill(0.0);
        let stride = self.dims.devices + 1;
        for (cell, &e) in self.cells.iter().enumerate() {
            out[cell * stride + e as usize] = 1.0;
        }
    }

    /// Parse the canonical text form, e.g. `"1,0;0,2"`.
    pub fn parse(text: &str, dims: Dims) -> Result<Self> {
        let rows: Vec<&str> = text.trim().split(';').collect();
        if rows.len() != dims.servers {
            return Err(Error::Parse(format!(
                "expected {} rows, found {}",
                dims.servers,
                rows.len()
            )));
        }
        let mut x = Self::initial(dims);
        for (m, row) in rows.iter().enumerate() {
            let fields: Vec<&str> = row.split(',').collect();
            if fields.len() != dims.subcarriers {
                return Err(Error::Parse(format!(
                    "row {m}: expected {} entries, found {}",
                    dims.subcarriers,
                    fields.len()
                )));
            }
            for (w, field) in fields.iter().enumerate() {
                let id: usize = field
                    .trim()
                    .parse()
                    .map_err(|_| Error::Parse(format!("row {m}: bad entry {field:?}")))?;
                if id == 0 {
                    continue;
                }
                if id > dims.devices {
                    return Err(Error::Parse(format!(
                        "device id {id} exceeds device count {}",
                        dims.devices
                    )));
                }
                x.apply_in_place(Action::new(m, w, id - 1)).map_err(|_| {
                    Error::Parse(format!("device {id} appears more than once"))
                })?;
            }
        }
        Ok(x)
    }
}

impl fmt::Display for AllocationMatrix {
    /// Canonical form: row-major, `,` between entries, `;` between rows.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for m in 0..self.dims.servers {
            if m > 0 {
                f.write_str(";")?;
            }
            for w in 0..self.dims.subcarriers {
                if w > 0 {
                    f.write_str(",")?;
                }
                write!(f, "{}", self.entry(m, w))?;
            }
        }
        Ok(())
    }
}

impl fmt::Debug for AllocationMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "AllocationMatrix({self})")
    }
}

/// Canonical serialization, also used as the dataset identity key.
pub fn canonical(x: &AllocationMatrix) -> String {
    format!("{x}")
}

/// All complete allocations, each exactly once, in lexicographic order of
/// the device placements.
pub fn enumerate_complete(dims: Dims, cap: u128) -> Result<Vec<AllocationMatrix>> {
    if !dims.is_feasible() {
        return Err(Error::Infeasible {
            devices: dims.devices,
            blocks: dims.cells(),
        });
    }
    match dims.complete_count() {
        Some(count) if count <= cap => {
            let mut out = Vec::with_capacity(count as usize);
            let mut x = AllocationMatrix::initial(dims);
            place_from(&mut x, 0, &mut out);
            Ok(out)
        }
        count => Err(Error::EnumerationCap {
            count: count.unwrap_or(u128::MAX),
            cap,
        }),
    }
}

fn place_from(x: &mut AllocationMatrix, device: usize, out: &mut Vec<AllocationMatrix>) {
    let dims = x.dims;
    if device == dims.devices {
        out.push(x.clone());
        return;
    }
    for m in 0..dims.servers {
        for w in 0..dims.subcarriers {
            if x.entry(m, w) == 0 {
                x.apply_in_place(Action::new(m, w, device))
                    .expect("free cell and unplaced device");
                place_from(x, device + 1, out);
                x.clear(m, w);
            }
        }
    }
}

/// A uniformly random complete allocation: a uniform random injection of
/// devices into cells.
pub fn uniform_complete(dims: Dims, rng: &mut crate::Rng) -> AllocationMatrix {
    assert!(dims.is_feasible(), "infeasible dimensions");
    let mut cells: Vec<usize> = (0..dims.cells()).collect();
    let mut x = AllocationMatrix::initial(dims);
    for d in 0..dims.devices {
        let pick = rng.gen_range(d..cells.len());
        cells.swap(d, pick);
        let c = cells[d];
        x.apply_in_place(Action::new(c / dims.subcarriers, c % dims.subcarriers, d))
            .expect("distinct cells");
    }
    x
}

/// Set of canonical matrices used for de-duplication.
pub type MatrixSet = BTreeSet<AllocationMatrix>;
