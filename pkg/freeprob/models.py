from django.db import models


class ExperimentRun(models.Model):
    COMMANDS = [
        ('nc', 'Non-crossing partitions'),
        ('algebra', 'Algebra context'),
        ('transform', 'Moment-cumulant transform'),
        ('canonical', 'Canonical model'),
        ('freeness', 'Freeness check'),
        ('bandmatrix', 'Band matrix'),
    ]

    command = models.CharField(max_length=20, choices=COMMANDS)
    action = models.CharField(max_length=30)
    parameters = models.JSONField(default=dict)
    results = models.JSONField(default=dict)
    seed = models.BigIntegerField(blank=True, null=True)
    verdict = models.CharField(max_length=20, blank=True)
    created_at = models.DateTimeField(auto_now_add=True)

    def __str__(self):
        outcome = f" -> {self.verdict}" if self.verdict else ''
        return f"{self.command} {self.action}{outcome} ({self.created_at:%Y-%m-%d %H:%M})"

    class Meta:
        ordering = ['-created_at']
