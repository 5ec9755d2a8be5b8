# Cryptographic building blocks: group, sharing, dkd, dsag, tsig
