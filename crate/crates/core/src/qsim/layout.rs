use super::{Result, SimError, MAX_QUBITS};

/// Ordered named registers over a contiguous block of qubits.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RegisterLayout {
    regs: Vec<(String, usize)>,
}

impl RegisterLayout {
    pub fn new<S: Into<String>>(regs: impl IntoIterator<Item = (S, usize)>) -> Result<Self> {
        let regs: Vec<(String, usize)> =
            regs.into_iter().map(|(n, w)| (n.into(), w)).collect();
        let mut seen = std::collections::HashSet::new();
        let mut total = 0usize;
        for (name, width) in &regs {
            if *width == 0 {
                return Err(SimError::EmptyRegister(name.clone()));
            }
            if !seen.insert(name.clone()) {
                return Err(SimError::DuplicateRegister(name.clone()));
            }
            total += width;
        }
        if total > MAX_QUBITS {
            return Err(SimError::WidthOverflow(total));
        }
        Ok(RegisterLayout { regs })
    }

    pub fn total_width(&self) -> usize {
        self.regs.iter().map(|(_, w)| w).sum()
    }

    pub fn dim(&self) -> usize {
        1 << self.total_width()
    }

    pub fn registers(&self) -> &[(String, usize)] {
        &self.regs
    }

    pub fn width_of(&self, name: &str) -> Result<usize> {
        self.regs
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, w)| *w)
            .ok_or_else(|| SimError::UnknownRegister(name.to_string()))
    }

    /// First qubit index of a register.
    pub fn offset_of(&self, name: &str) -> Result<usize> {
        let mut off = 0;
        for (n, w) in &self.regs {
            if n == name {
                return Ok(off);
            }
            off += w;
        }
        Err(SimError::UnknownRegister(name.to_string()))
    }

    /// Qubit indices of a register, in order.
    pub fn qubits_of(&self, name: &str) -> Result<Vec<usize>> {
        let off = self.offset_of(name)?;
        let w = self.width_of(name)?;
        Ok((off..off + w).collect())
    }

    /// Layout with one register removed.
    pub fn without(&self, name: &str) -> Result<RegisterLayout> {
        self.width_of(name)?;
        RegisterLayout::new(
            self.regs
                .iter()
                .filter(|(n, _)| n != name)
                .map(|(n, w)| (n.clone(), *w)),
        )
    }

    /// Layout restricted to the given registers, in the given order.
    pub fn keep(&self, names: &[&str]) -> Result<RegisterLayout> {
        if names.is_empty() {
            return Err(SimError::EmptyKeepSet);
        }
        let mut regs = Vec::new();
        for name in names {
            regs.push((name.to_string(), self.width_of(name)?));
        }
        RegisterLayout::new(regs)
    }
}
