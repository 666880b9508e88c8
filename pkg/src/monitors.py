from tensorboardX import SummaryWriter

class SweepMonitor():

    def __init__(self, logdir=None):

        super(SweepMonitor, self).__init__()

        self.writer = SummaryWriter(logdir)

    def write(self, it, **metrics):

        for key, item in metrics.items():
            self.writer.add_scalar(f"sweep/{key}", item, it)

    def close(self, logfile="./monitor_scalars.json"):
        self.writer.export_scalars_to_json(logfile)
        self.writer.close()
