# Two-organization transfer flow: parties, bus, ledger, sessions, faults
