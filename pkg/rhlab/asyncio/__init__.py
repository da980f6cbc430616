from rhlab.asyncio.sweeps import asymptotics_sweep, weak_sweep
