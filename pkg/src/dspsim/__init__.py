"""Instruction-accurate, cycle-approximate simulator for an RV32IMC core with
DSP extensions, plus its assembler, a 4-core shared-memory cluster model,
an energy model and a kernel benchmark suite."""

__version__ = "0.1.0"
