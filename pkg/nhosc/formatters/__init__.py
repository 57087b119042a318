"""Formatters for nhosc output."""

from nhosc.formatters.reports import (
    read_aux_table,
    read_wavefunction,
    write_aux_table,
    write_energy_report,
    write_wavefunction,
)

__all__ = [
    'read_aux_table',
    'read_wavefunction',
    'write_aux_table',
    'write_energy_report',
    'write_wavefunction',
]
